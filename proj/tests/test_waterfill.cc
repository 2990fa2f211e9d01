#include <gtest/gtest.h>

#include <limits>

#include "dirinfo/errors.h"
#include "dirinfo/waterfill.h"
#include "test_util.h"

namespace dirinfo::waterfill {
namespace {

using dirinfo::testing::Mat;
using dirinfo::testing::S;

Problem Scalar(double D, double KV, double w) { return {S(D), S(KV), S(w)}; }

TEST(Objective, Examples) {
  EXPECT_EQ(Objective(Scalar(1, 1, 0.2), S(0)), 0.0);
  EXPECT_NEAR(Objective(Scalar(1, 1, 0.2), S(1.5)), 0.5 * std::log(2.5) - 0.3, 1e-15);
  EXPECT_NEAR(Objective(Scalar(1, 1, 0.2), S(3)), 0.5 * std::log(4.0) - 0.6, 1e-15);
  EXPECT_LT(Objective(Scalar(1, 1, 0.2), S(3)), Objective(Scalar(1, 1, 0.2), S(1.5)));
}

TEST(Gradient, Examples) {
  EXPECT_NEAR(Gradient(Scalar(1, 1, 0.2), S(1.5))(0, 0), 0.0, 1e-15);
  const Problem p{Mat({{1, 0}, {0.5, 2}}), Mat({{2, 0.3}, {0.3, 1}}),
                  MatrixXd::Zero(2, 2)};
  const MatrixXd expect = 0.5 * p.D.transpose() * p.KV.inverse() * p.D;
  EXPECT_TRUE(Gradient(p, MatrixXd::Zero(2, 2)).isApprox(expect, 1e-14));
  EXPECT_DOUBLE_EQ(Gradient(Scalar(2, 1, 1), S(0))(0, 0), 1.0);
}

TEST(Solve, Examples) {
  // weight = sR + P D^2 with s = 0.05, P = 0.15
  auto r = Solve(Scalar(1, 1, 0.05 + 0.15));
  EXPECT_NEAR(r.KZ(0, 0), 1.5, 1e-8);
  r = Solve(Scalar(1, 1, 1 + 3));
  EXPECT_NEAR(r.KZ(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  r = Solve({MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
             Mat({{0.1, 0}, {0, 10}})});
  EXPECT_TRUE(r.KZ.isApprox(Mat({{4, 0}, {0, 0}}), 1e-7));
  EXPECT_LE(r.projected_gradient_norm, 1e-9);
  EXPECT_LE(std::abs(r.complementarity), 1e-9);
}

TEST(ScalarSolve, Examples) {
  EXPECT_NEAR(ScalarSolve(1, 1, 0.2).kz, 1.5, 1e-15);
  EXPECT_EQ(ScalarSolve(1, 1, 4).kz, 0.0);
  EXPECT_EQ(ScalarSolve(1, 1, 0.1).kz, 4.0);
  EXPECT_EQ(ScalarSolve(1, 1, 0).kz, std::numeric_limits<double>::infinity());
  EXPECT_THROW(ScalarSolve(0, 1, 0), PreconditionError);
}

// Grid-search oracle over kz in [0, 100] with step 1e-4.
TEST(ScalarSolve, MatchesGridSearch) {
  for (const auto& [D, KV, w] : std::vector<std::tuple<double, double, double>>{
           {1, 1, 0.2}, {1, 1, 4}, {1, 1, 0.1}, {2, 0.5, 0.03}, {0.7, 2, 0.05}}) {
    double best = -1e300, arg = 0;
    for (int k = 0; k <= 1000000; ++k) {
      const double kz = k * 1e-4;
      const double f = 0.5 * std::log((D * D * kz + KV) / KV) - w * kz;
      if (f > best) {
        best = f;
        arg = kz;
      }
    }
    const auto r = ScalarSolve(D, KV, w);
    EXPECT_NEAR(r.kz, arg, 1e-4);
    EXPECT_NEAR(r.value, best, 1e-8);
  }
}

TEST(Solve, ScalarOracleGrid) {
  const std::vector<double> weights = {0.01, 0.03, 0.1, 0.3, 1, 3, 10};
  const std::vector<double> kvs = {0.1, 0.25, 0.5, 1, 2, 3.5, 5};
  for (double w : weights) {
    for (double kv : kvs) {
      const auto r = Solve(Scalar(1.3, kv, w));
      const auto o = ScalarSolve(1.3, kv, w);
      EXPECT_NEAR(r.KZ(0, 0), o.kz, 1e-8) << w << " " << kv;
      EXPECT_NEAR(r.value, o.value, 1e-8);
    }
  }
}

TEST(Solve, DiagonalDecoupling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int t = 0; t < 20; ++t) {
    const VectorXd d = (VectorXd(2) << u(rng), u(rng)).finished();
    const VectorXd kv = (VectorXd(2) << u(rng), u(rng)).finished();
    const VectorXd w = (VectorXd(2) << u(rng) / 4, u(rng) / 4).finished();
    const auto r = Solve({d.asDiagonal(), kv.asDiagonal(), w.asDiagonal()});
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(r.KZ(i, i), ScalarSolve(d(i), kv(i), w(i)).kz, 1e-7);
    }
    EXPECT_NEAR(r.KZ(0, 1), 0.0, 1e-7);
  }
}

// Closed form via M = KV^{-1/2} D W^{-1/2}: with X = W^{1/2} K W^{1/2} the
// problem separates along the right singular vectors of M.
MatrixXd SvdOracle(const Problem& p) {
  const MatrixXd Wh = SymmetricSqrt(p.weight);
  const MatrixXd Wih = Wh.inverse();
  const MatrixXd M = SymmetricSqrt(p.KV).inverse() * p.D * Wih;
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
  VectorXd x = VectorXd::Zero(M.cols());
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    const double sv = svd.singularValues()(i);
    if (sv > 0) x(i) = std::max(0.0, 0.5 - 1.0 / (sv * sv));
  }
  const MatrixXd X = svd.matrixV() * x.asDiagonal() * svd.matrixV().transpose();
  return Wih * X * Wih;
}

TEST(Solve, MatchesSvdClosedForm) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 30; ++t) {
    const int p = 2 + t % 2, q = 1 + t % 3;
    const Problem prob{dirinfo::testing::RandomMatrix(rng, p, q),
                       dirinfo::testing::RandomSpd(rng, p, 0.2),
                       dirinfo::testing::RandomSpd(rng, q, 0.05) * 0.3};
    const auto r = Solve(prob);
    const MatrixXd expect = SvdOracle(prob);
    EXPECT_LE((r.KZ - expect).norm(), 1e-7 * (1 + expect.norm())) << t;
    EXPECT_NEAR(r.value, Objective(prob, expect), 1e-9);
  }
}

TEST(Properties, Concavity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const Problem p{dirinfo::testing::RandomMatrix(rng, 2, 2),
                    dirinfo::testing::RandomSpd(rng, 2), dirinfo::testing::RandomSpd(rng, 2)};
    const MatrixXd K1 = dirinfo::testing::RandomSpd(rng, 2, 0.0);
    const MatrixXd K2 = dirinfo::testing::RandomSpd(rng, 2, 0.0);
    const double l = u(rng);
    EXPECT_GE(Objective(p, l * K1 + (1 - l) * K2),
              l * Objective(p, K1) + (1 - l) * Objective(p, K2) - 1e-9);
  }
}

// Central differences along symmetric coordinate directions.
double FdDirectional(const Problem& p, const MatrixXd& K, const MatrixXd& E) {
  const double h = 1e-6;
  return (Objective(p, K + h * E) - Objective(p, K - h * E)) / (2 * h);
}

TEST(Properties, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const Problem p{dirinfo::testing::RandomMatrix(rng, 2, 2),
                    dirinfo::testing::RandomSpd(rng, 2), dirinfo::testing::RandomSpd(rng, 2)};
    const MatrixXd K = dirinfo::testing::RandomSpd(rng, 2, 0.1);
    const MatrixXd G = Gradient(p, K);
    for (int i = 0; i < 2; ++i) {
      for (int j = i; j < 2; ++j) {
        MatrixXd E = MatrixXd::Zero(2, 2);
        E(i, j) = E(j, i) = 1.0;
        const double analytic = (G.cwiseProduct(E)).sum();
        const double fd = FdDirectional(p, K, E);
        EXPECT_LE(std::abs(analytic - fd), 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(Solve, DetectsUnboundedObjective) {
  EXPECT_THROW(Solve(Scalar(1, 1, 0)), UnboundedError);
  EXPECT_THROW(Solve({MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                      Mat({{1, 0}, {0, 0}})}),
               UnboundedError);
  // A direction D does not see is harmless.
  const auto r = Solve({Mat({{1, 0}}), S(1), Mat({{0.25, 0}, {0, 0}})});
  EXPECT_NEAR(r.KZ(0, 0), 1.0, 1e-8);
  EXPECT_NEAR(r.KZ(1, 1), 0.0, 1e-8);
}

TEST(Solve, ZeroWeightWithZeroChannel) {
  const auto r = Solve({MatrixXd::Zero(1, 1), S(1), S(0)});
  EXPECT_EQ(r.KZ(0, 0), 0.0);
}

TEST(Solve, RejectsIndefiniteWeight) {
  EXPECT_THROW(Solve(Scalar(1, 1, -0.5)), PreconditionError);
}

}  // namespace
}  // namespace dirinfo::waterfill
