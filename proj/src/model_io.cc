#include "dirinfo/model_io.h"

#include <fstream>
#include <set>

#include "dirinfo/errors.h"

namespace dirinfo {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& key, const std::string& what) {
  throw Error("model file: '" + key + "' " + what);
}

double Number(const json& j, const std::string& key) {
  if (!j.is_number()) Fail(key, "must be a number");
  return j.get<double>();
}

// Depth of nesting of the first element: number = 0, [1,2] = 1, [[1]] = 2.
int Depth(const json& j) {
  int d = 0;
  const json* cur = &j;
  while (cur->is_array()) {
    ++d;
    if (cur->empty()) break;
    cur = &cur->front();
  }
  return d;
}

MatrixXd ParseMatrix(const json& j, const std::string& key) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (Depth(j) != 2) Fail(key, "must be a number or a nested array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  if (rows == 0 || cols == 0) Fail(key, "must not be empty");
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      Fail(key, "has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = Number(row[c], key);
  }
  return m;
}

VectorXd ParseVector(const json& j, const std::string& key) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) Fail(key, "must be a number or an array");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = Number(j[i], key);
  return v;
}

// A single matrix (broadcast) or a list of matrices.
std::vector<MatrixXd> ParseSequence(const json& j, const std::string& key) {
  if (Depth(j) == 3) {
    std::vector<MatrixXd> seq;
    for (const auto& m : j) seq.push_back(ParseMatrix(m, key));
    if (seq.empty()) Fail(key, "must not be empty");
    return seq;
  }
  if (j.is_array() && !j.empty() && Depth(j) == 1 && j.size() > 1) {
    // list of scalars: a 1x1 sequence
    std::vector<MatrixXd> seq;
    for (const auto& x : j) seq.push_back(ParseMatrix(x, key));
    return seq;
  }
  return {ParseMatrix(j, key)};
}

void CheckKeys(const json& doc, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) Fail(key, "is not a recognized key");
  }
}

const json& Require(const json& doc, const std::string& key) {
  auto it = doc.find(key);
  if (it == doc.end()) Fail(key, "is required");
  return *it;
}

InitialOutput ParseInitial(const json& j, int p) {
  if (j.is_null()) return VectorXd(VectorXd::Zero(p));
  if (!j.is_object()) {
    return ParseVector(j, "initial_output");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "value" && key != "mean" && key != "covariance") {
      Fail("initial_output." + key, "is not a recognized key");
    }
  }
  if (j.contains("value")) {
    if (j.contains("mean") || j.contains("covariance")) {
      Fail("initial_output", "mixes 'value' with 'mean'/'covariance'");
    }
    return ParseVector(j["value"], "initial_output.value");
  }
  GaussianInitialOutput g;
  g.mean = j.contains("mean") ? ParseVector(j["mean"], "initial_output.mean")
                              : VectorXd(VectorXd::Zero(p));
  g.covariance =
      j.contains("covariance")
          ? ParseMatrix(j["covariance"], "initial_output.covariance")
          : MatrixXd(MatrixXd::Zero(p, p));
  return g;
}

int ParseHorizon(const json& doc) {
  if (!doc.contains("horizon")) return 0;
  const json& h = doc["horizon"];
  if (!h.is_number_integer() || h.get<long long>() < 0) {
    Fail("horizon", "must be a nonnegative integer");
  }
  return h.get<int>();
}

LoadedModel ParseMemoryModel(const json& doc) {
  CheckKeys(doc, {"horizon", "C_lags", "D", "K_V", "R", "cost_memory", "Q_K",
                  "terminal_Q_K", "kappa", "initial_outputs", "description"});
  MemoryJModel m;
  m.horizon = ParseHorizon(doc);
  const json& lags = Require(doc, "C_lags");
  if (!lags.is_array() || lags.empty()) Fail("C_lags", "must be a non-empty list");
  for (const auto& c : lags) m.C_lags.push_back(ParseMatrix(c, "C_lags"));
  m.D = ParseMatrix(Require(doc, "D"), "D");
  m.KV = ParseMatrix(Require(doc, "K_V"), "K_V");
  m.R = ParseMatrix(Require(doc, "R"), "R");
  m.output_dim = static_cast<int>(m.C_lags.front().rows());
  m.input_dim = static_cast<int>(m.D.cols());
  if (doc.contains("cost_memory")) {
    const json& k = doc["cost_memory"];
    if (!k.is_number_integer()) Fail("cost_memory", "must be an integer");
    m.cost_memory = k.get<int>();
  }
  m.Q_K = doc.contains("Q_K")
              ? ParseMatrix(doc["Q_K"], "Q_K")
              : MatrixXd(MatrixXd::Zero(m.cost_memory * m.output_dim,
                                        m.cost_memory * m.output_dim));
  if (doc.contains("terminal_Q_K")) {
    m.terminal_Q_K = ParseMatrix(doc["terminal_Q_K"], "terminal_Q_K");
  }
  m.kappa = Number(Require(doc, "kappa"), "kappa");
  if (doc.contains("initial_outputs")) {
    m.initial_outputs = ParseVector(doc["initial_outputs"], "initial_outputs");
  }
  if (const auto issues = ValidateMemoryModel(m); !issues.empty()) {
    std::string msg = "invalid memory model:";
    for (const auto& issue : issues) msg += " " + issue.message + ";";
    if (issues.front().code == "dimension_mismatch") throw DimensionError(msg);
    throw PreconditionError(msg);
  }
  LoadedModel out{AugmentMemory(m), m};
  return out;
}

}  // namespace

LoadedModel ModelFromJson(const json& doc) {
  if (!doc.is_object()) throw Error("model file: top level must be an object");
  if (doc.contains("C_lags")) return ParseMemoryModel(doc);
  CheckKeys(doc, {"horizon", "time_invariant", "C", "D", "K_V", "R", "Q",
                  "terminal_Q", "kappa", "initial_output", "description"});
  ChannelModel m;
  m.horizon = ParseHorizon(doc);
  m.time_invariant = true;
  if (doc.contains("time_invariant")) {
    if (!doc["time_invariant"].is_boolean()) {
      Fail("time_invariant", "must be a boolean");
    }
    m.time_invariant = doc["time_invariant"].get<bool>();
  }
  m.C_seq = ParseSequence(Require(doc, "C"), "C");
  m.D_seq = ParseSequence(Require(doc, "D"), "D");
  m.KV_seq = ParseSequence(Require(doc, "K_V"), "K_V");
  m.R_seq = ParseSequence(Require(doc, "R"), "R");
  m.output_dim = static_cast<int>(m.C_seq.front().rows());
  m.input_dim = static_cast<int>(m.D_seq.front().cols());
  m.Q_seq = doc.contains("Q")
                ? ParseSequence(doc["Q"], "Q")
                : std::vector<MatrixXd>{MatrixXd::Zero(m.output_dim,
                                                       m.output_dim)};
  m.terminal_Q = doc.contains("terminal_Q")
                     ? ParseMatrix(doc["terminal_Q"], "terminal_Q")
                     : m.Q_seq.size() == 1
                           ? m.Q_seq.front()
                           : m.Q_seq.at(std::min<size_t>(m.Q_seq.size() - 1,
                                                         m.horizon));
  if (!m.time_invariant && m.horizon >= 0) {
    const size_t n = static_cast<size_t>(m.horizon) + 1;
    for (auto* seq : {&m.C_seq, &m.D_seq, &m.KV_seq, &m.R_seq, &m.Q_seq}) {
      if (seq->size() == 1) seq->assign(n, seq->front());
    }
  }
  m.kappa = Number(Require(doc, "kappa"), "kappa");
  m.initial_output = ParseInitial(
      doc.contains("initial_output") ? doc["initial_output"] : json(),
      m.output_dim);
  return {m, std::nullopt};
}

LoadedModel LoadModelFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("malformed JSON in '" + path + "': " + e.what());
  }
  return ModelFromJson(doc);
}

json MatrixToJson(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json VectorToJson(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

namespace {

json SequenceToJson(const std::vector<MatrixXd>& seq) {
  if (seq.size() == 1) return MatrixToJson(seq.front());
  json out = json::array();
  for (const auto& m : seq) out.push_back(MatrixToJson(m));
  return out;
}

}  // namespace

json ModelToJson(const ChannelModel& model) {
  json doc;
  doc["horizon"] = model.horizon;
  doc["time_invariant"] = model.time_invariant;
  doc["C"] = SequenceToJson(model.C_seq);
  doc["D"] = SequenceToJson(model.D_seq);
  doc["K_V"] = SequenceToJson(model.KV_seq);
  doc["R"] = SequenceToJson(model.R_seq);
  doc["Q"] = SequenceToJson(model.Q_seq);
  doc["terminal_Q"] = MatrixToJson(model.terminal_Q);
  doc["kappa"] = model.kappa;
  if (const auto* g = std::get_if<GaussianInitialOutput>(&model.initial_output)) {
    doc["initial_output"] = {{"mean", VectorToJson(g->mean)},
                             {"covariance", MatrixToJson(g->covariance)}};
  } else {
    doc["initial_output"] = {
        {"value", VectorToJson(std::get<VectorXd>(model.initial_output))}};
  }
  return doc;
}

json MemoryModelToJson(const MemoryJModel& model) {
  json doc;
  doc["horizon"] = model.horizon;
  json lags = json::array();
  for (const auto& c : model.C_lags) lags.push_back(MatrixToJson(c));
  doc["C_lags"] = lags;
  doc["D"] = MatrixToJson(model.D);
  doc["K_V"] = MatrixToJson(model.KV);
  doc["R"] = MatrixToJson(model.R);
  doc["cost_memory"] = model.cost_memory;
  doc["Q_K"] = MatrixToJson(model.Q_K);
  if (model.terminal_Q_K) doc["terminal_Q_K"] = MatrixToJson(*model.terminal_Q_K);
  doc["kappa"] = model.kappa;
  doc["initial_outputs"] = VectorToJson(model.initial_outputs);
  return doc;
}

}  // namespace dirinfo
