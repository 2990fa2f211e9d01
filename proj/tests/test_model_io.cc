#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "dirinfo/errors.h"
#include "dirinfo/model_io.h"
#include "test_util.h"

namespace dirinfo {
namespace {

using nlohmann::json;

TEST(ModelIo, ScalarShorthand) {
  const auto lm = ModelFromJson(json::parse(
      R"({"C": 2, "D": 1, "K_V": 1, "R": 1, "Q": 0, "kappa": 9})"));
  EXPECT_FALSE(lm.memory.has_value());
  EXPECT_TRUE(ValidateModel(lm.model).empty());
  const auto sc = ScalarView(lm.model);
  EXPECT_EQ(sc.C, 2);
  EXPECT_EQ(sc.kappa, 9);
  EXPECT_EQ(lm.model.horizon, 0);
  EXPECT_EQ(lm.model.InitialMean()(0), 0.0);
}

TEST(ModelIo, RoundTrip) {
  auto m = MakeTimeInvariantModel(testing::Mat({{1.2, 0.3}, {0, 0.6}}),
                                  testing::Mat({{1, 0}, {0.2, 1}}),
                                  testing::Mat({{1, 0.2}, {0.2, 0.5}}),
                                  testing::Mat({{1, 0}, {0, 2}}),
                                  MatrixXd::Zero(2, 2), 5, 7,
                                  MatrixXd::Identity(2, 2));
  m.initial_output =
      GaussianInitialOutput{VectorXd::Ones(2), MatrixXd::Identity(2, 2)};
  const json doc = ModelToJson(m);
  const auto back = ModelFromJson(doc).model;
  EXPECT_EQ(ModelToJson(back), doc);
  EXPECT_EQ(back.horizon, 7);
  EXPECT_TRUE(back.terminal_Q.isApprox(MatrixXd::Identity(2, 2)));
  EXPECT_TRUE(std::holds_alternative<GaussianInitialOutput>(back.initial_output));
}

TEST(ModelIo, TimeVaryingSequences) {
  const auto lm = ModelFromJson(json::parse(R"({
      "horizon": 2, "time_invariant": false,
      "C": [[[2]], [[1]], [[0.5]]], "D": 1, "K_V": [1, 2, 3], "R": 1,
      "Q": 0, "terminal_Q": 1, "kappa": 1})"));
  EXPECT_TRUE(ValidateModel(lm.model).empty());
  EXPECT_EQ(lm.model.C(1)(0, 0), 1.0);
  EXPECT_EQ(lm.model.KV(2)(0, 0), 3.0);
  EXPECT_EQ(lm.model.Q(2)(0, 0), 1.0);
}

TEST(ModelIo, MemoryModelIsAugmented) {
  const auto lm = ModelFromJson(json::parse(R"({
      "C_lags": [0.5, 0.25], "D": 1, "K_V": 1, "R": 1, "Q_K": 0,
      "kappa": 2, "initial_outputs": [1]})"));
  ASSERT_TRUE(lm.memory.has_value());
  EXPECT_EQ(lm.model.output_dim, 2);
  EXPECT_EQ(lm.model.InitialMean()(0), 1.0);
  EXPECT_EQ(lm.model.InitialMean()(1), 0.0);
  EXPECT_EQ(ModelFromJson(MemoryModelToJson(*lm.memory)).model.C(0),
            lm.model.C(0));
}

TEST(ModelIo, UnknownKeyIsAnError) {
  EXPECT_THROW(ModelFromJson(json::parse(
                   R"({"C": 2, "D": 1, "K_V": 1, "R": 1, "kappa": 9, "k": 1})")),
               Error);
}

TEST(ModelIo, MissingAndMalformedFields) {
  EXPECT_THROW(ModelFromJson(json::parse(R"({"C": 2, "D": 1, "K_V": 1, "R": 1})")),
               Error);
  EXPECT_THROW(ModelFromJson(json::parse(
                   R"({"C": [[1, 2], [3]], "D": 1, "K_V": 1, "R": 1, "kappa": 1})")),
               Error);
  EXPECT_THROW(ModelFromJson(json::parse(
                   R"({"C": "x", "D": 1, "K_V": 1, "R": 1, "kappa": 1})")),
               Error);
  EXPECT_THROW(ModelFromJson(json::parse("[1, 2]")), Error);
}

TEST(ModelIo, FileErrors) {
  EXPECT_THROW(LoadModelFile("/nonexistent/model.json"), Error);
  const std::string path = ::testing::TempDir() + "bad_model.json";
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  try {
    LoadModelFile(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("malformed JSON"), std::string::npos);
  }
  std::remove(path.c_str());
}

TEST(ModelIo, ShippedExamplesAreValid) {
  for (const char* name :
       {"scalar_unstable_kappa9", "scalar_stable_kappa1", "scalar_unstable_kappa2",
        "memory2_scalar", "mimo_2x2"}) {
    const auto lm =
        LoadModelFile(std::string(DIRINFO_MODELS_DIR) + "/" + name + ".json");
    EXPECT_TRUE(ValidateModel(lm.model).empty()) << name;
  }
}

}  // namespace
}  // namespace dirinfo
