#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "dirinfo/errors.h"
#include "dirinfo/stability.h"
#include "test_util.h"

namespace dirinfo {
namespace {

using testing::Mat;
using testing::S;

TEST(SpectralRadius, Examples) {
  auto r = SpectralRadius(S(0.5));
  EXPECT_DOUBLE_EQ(r.spectral_radius, 0.5);
  EXPECT_TRUE(r.stable);
  r = SpectralRadius(S(2));
  EXPECT_DOUBLE_EQ(r.spectral_radius, 2);
  EXPECT_FALSE(r.stable);
  // lambda^2 - lambda + 0.25: double root 0.5
  r = SpectralRadius(Mat({{0, 1}, {-0.25, 1}}));
  EXPECT_NEAR(r.spectral_radius, 0.5, 1e-7);
  EXPECT_EQ(r.eigenvalues.size(), 2u);
  EXPECT_THROW(SpectralRadius(MatrixXd::Zero(2, 3)), DimensionError);
}

TEST(SpectralRadius, BoundaryIsNotStable) {
  EXPECT_FALSE(SpectralRadius(S(1.0)).stable);
  EXPECT_FALSE(SpectralRadius(S(1.0 - 1e-10)).stable);
  EXPECT_TRUE(SpectralRadius(S(1.0 - 1e-8)).stable);
}

TEST(Controllability, Examples) {
  EXPECT_TRUE(IsControllable(Mat({{1, 1}, {0, 1}}), Mat({{0}, {1}})));
  EXPECT_FALSE(IsControllable(MatrixXd::Identity(2, 2), Mat({{1}, {0}})));
  EXPECT_TRUE(IsControllable(S(0), S(1)));
  EXPECT_THROW(IsControllable(MatrixXd::Identity(2, 2), MatrixXd::Ones(3, 1)),
               DimensionError);
}

TEST(Observability, Examples) {
  EXPECT_TRUE(IsObservable(Mat({{1, 0}}), Mat({{1, 1}, {0, 1}})));
  EXPECT_FALSE(IsObservable(Mat({{0, 0}}), Mat({{1, 1}, {0, 1}})));
  EXPECT_TRUE(IsObservable(S(1), S(2)));
}

TEST(Stabilizability, Examples) {
  EXPECT_TRUE(IsStabilizable(S(2), S(1)));
  EXPECT_FALSE(IsStabilizable(Mat({{2, 0}, {0, 0.5}}), Mat({{0}, {1}})));
  EXPECT_TRUE(IsStabilizable(Mat({{0.3, 0.2}, {0, 0.5}}), MatrixXd::Zero(2, 1)));
}

TEST(Detectability, Examples) {
  EXPECT_TRUE(IsDetectable(MatrixXd::Zero(2, 2), Mat({{0.5, 0.1}, {0, 0.2}})));
  EXPECT_FALSE(IsDetectable(S(0), S(2)));
  EXPECT_TRUE(IsDetectable(MatrixXd::Identity(2, 2), Mat({{3, 1}, {0, 2}})));
}

TEST(Stabilizability, ComplexUnstablePair) {
  // Rotation scaled by 1.2: complex eigenvalues outside the disc.
  const MatrixXd A = 1.2 * Mat({{0, -1}, {1, 0}});
  EXPECT_TRUE(IsStabilizable(A, Mat({{1}, {0}})));
  EXPECT_FALSE(IsStabilizable(A, Mat({{0}, {0}})));
}

TEST(StabilityProperties, DualityAndImplications) {
  std::mt19937_64 rng(42);
  int controllable = 0;
  for (int t = 0; t < 50; ++t) {
    const MatrixXd A = testing::RandomWithRadius(rng, 3, 0.5 + 1.5 * (t % 4) / 3.0);
    MatrixXd B = testing::RandomMatrix(rng, 3, 1 + t % 2);
    if (t % 5 == 0) B.row(0).setZero();
    MatrixXd G = testing::RandomMatrix(rng, 1 + t % 3, 3);
    if (t % 7 == 0) G.col(1).setZero();
    EXPECT_EQ(IsDetectable(G, A), IsStabilizable(A.transpose(), G.transpose()));
    EXPECT_EQ(IsObservable(G, A), IsControllable(A.transpose(), G.transpose()));
    if (IsControllable(A, B)) {
      ++controllable;
      EXPECT_TRUE(IsStabilizable(A, B));
    }
    if (IsObservable(G, A)) EXPECT_TRUE(IsDetectable(G, A));
  }
  EXPECT_GT(controllable, 10);
}

TEST(Lyapunov, StepExamples) {
  EXPECT_TRUE(LyapunovStep(MatrixXd::Zero(2, 2), Mat({{3, 1}, {2, 0}}),
                           MatrixXd::Identity(2, 2))
                  .isApprox(MatrixXd::Identity(2, 2)));
  EXPECT_DOUBLE_EQ(LyapunovStep(S(1), S(0.5), S(2))(0, 0), 2.25);
  EXPECT_NEAR(LyapunovStep(S(8.0 / 3), S(0.5), S(2))(0, 0), 8.0 / 3, 1e-15);
}

TEST(Lyapunov, SolveExamples) {
  EXPECT_NEAR(SolveLyapunov(S(0.5), S(2))(0, 0), 8.0 / 3, 1e-14);
  const MatrixXd W = Mat({{2, 0.5}, {0.5, 1}});
  EXPECT_TRUE(SolveLyapunov(MatrixXd::Zero(2, 2), W).isApprox(W, 1e-14));
  try {
    SolveLyapunov(S(1.1), S(1));
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("not exponentially stable"),
              std::string::npos);
  }
}

// Independent oracle: full Kronecker system (I - A (x) A) vec(S) = vec(W).
MatrixXd KroneckerLyapunov(const MatrixXd& A, const MatrixXd& W) {
  const Eigen::Index n = A.rows();
  const MatrixXd K = MatrixXd::Identity(n * n, n * n) -
                     Eigen::kroneckerProduct(A, A).eval();
  const VectorXd w = Eigen::Map<const VectorXd>(W.data(), n * n);
  const VectorXd x = K.fullPivLu().solve(w);
  return Eigen::Map<const MatrixXd>(x.data(), n, n);
}

TEST(Lyapunov, RandomInstancesMatchKroneckerAndIteration) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const double radius = 0.1 + 0.85 * (t % 10) / 9.0;
    const MatrixXd A = testing::RandomWithRadius(rng, 3, radius);
    const MatrixXd W = testing::RandomSpd(rng, 3, 0.01);
    const MatrixXd Sigma = SolveLyapunov(A, W);
    EXPECT_LE(LyapunovResidual(Sigma, A, W), 1e-10 * (1 + W.norm()));
    EXPECT_LE((Sigma - KroneckerLyapunov(A, W)).norm(), 1e-9 * (1 + Sigma.norm()));
    MatrixXd K = MatrixXd::Zero(3, 3);
    for (int k = 0; k < 20000; ++k) {
      const MatrixXd next = LyapunovStep(K, A, W);
      const bool done = (next - K).norm() < 1e-13 * (1 + K.norm());
      K = next;
      if (done) break;
    }
    EXPECT_LE((K - Sigma).norm(), 1e-8 * (1 + Sigma.norm()));
  }
}

TEST(Lyapunov, TwoOfThreePositivity) {
  std::mt19937_64 rng(9);
  int checked = 0;
  for (int t = 0; t < 60; ++t) {
    const MatrixXd A = testing::RandomWithRadius(rng, 3, 0.9);
    const MatrixXd B = testing::RandomMatrix(rng, 3, 1);
    const MatrixXd W = B * B.transpose();  // rank one
    if (!IsControllable(A, SymmetricSqrt(W))) continue;
    ++checked;
    EXPECT_GT(MinEigenvalue(SolveLyapunov(A, W)), 0.0);
  }
  EXPECT_GT(checked, 40);
}

}  // namespace
}  // namespace dirinfo
