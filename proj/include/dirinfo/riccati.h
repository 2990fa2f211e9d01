#pragma once

#include <string>

#include "dirinfo/linalg.h"

namespace dirinfo {

/// Blocks of the quadratic form minimized at one backward step:
///   H11 = C^T P+ C + sQ,  H12 = C^T P+ D,  H22 = D^T P+ D + sR.
struct RiccatiStepBlocks {
  MatrixXd H11;
  MatrixXd H12;
  MatrixXd H22;
};

struct RiccatiStep {
  MatrixXd P;
  RiccatiStepBlocks blocks;
};

/// P = H11 - H12 H22^{-1} H12^T (symmetrized). Requires s > 0.
/// Throws PreconditionError when H22 is numerically singular.
RiccatiStep RiccatiBackwardStep(const Eigen::Ref<const MatrixXd>& Pnext,
                                const Eigen::Ref<const MatrixXd>& C,
                                const Eigen::Ref<const MatrixXd>& D,
                                const Eigen::Ref<const MatrixXd>& Q,
                                const Eigen::Ref<const MatrixXd>& R, double s);

/// Gamma = -H22^{-1} H12^T.
MatrixXd OptimalGain(const RiccatiStepBlocks& blocks);

struct AreSolution {
  MatrixXd P;
  MatrixXd gain;         // Gamma*, q x p
  MatrixXd closed_loop;  // C + D Gamma*
  bool stabilizing = false;
  /// ||P - f(P)||_F / (1 + ||P||_F).
  double residual = 0.0;
  int iterations = 0;
  /// True when the fixed point came from the search started at P = I because
  /// (G, C) is not detectable.
  bool degenerate_detectability = false;
};

struct AreOptions {
  double tolerance = 1e-11;
  int max_iter = 100000;
};

/// Stabilizing solution of P = C^T P C + sQ - C^T P D (D^T P D + sR)^{-1}
/// D^T P C, by value iteration from P = sQ.
///
/// Requires (C, D) stabilizable. When (G, C) with Q = G^T G is not detectable
/// the iteration is restarted from P = I and the limit is accepted only if
/// it is stabilizing. Throws PreconditionError naming the failed test, or
/// ConvergenceError.
AreSolution SolveAre(const Eigen::Ref<const MatrixXd>& C,
                     const Eigen::Ref<const MatrixXd>& D,
                     const Eigen::Ref<const MatrixXd>& Q,
                     const Eigen::Ref<const MatrixXd>& R, double s,
                     const AreOptions& options = {});

/// Relative fixed-point residual of a candidate P.
double AreResidual(const Eigen::Ref<const MatrixXd>& P,
                   const Eigen::Ref<const MatrixXd>& C,
                   const Eigen::Ref<const MatrixXd>& D,
                   const Eigen::Ref<const MatrixXd>& Q,
                   const Eigen::Ref<const MatrixXd>& R, double s);

enum class Uniqueness {
  kUnique,       // (C,D) stabilizable, (G,C) detectable: only PSD solution
  kConditional,  // unique among stabilizing solutions only
  kNone,
};

const char* ToString(Uniqueness u);

struct AreClassification {
  bool psd = false;
  double min_eigenvalue = 0.0;
  bool stabilizing = false;
  double closed_loop_radius = 0.0;
  bool stabilizable = false;
  bool detectable = false;
  /// (C, K_V^{1/2}) controllable: with a stabilizing gain the stationary
  /// output covariance is then positive definite.
  bool noise_controllable = false;
  Uniqueness uniqueness = Uniqueness::kNone;
  double residual = 0.0;
};

AreClassification ClassifyAre(const Eigen::Ref<const MatrixXd>& P,
                              const Eigen::Ref<const MatrixXd>& C,
                              const Eigen::Ref<const MatrixXd>& D,
                              const Eigen::Ref<const MatrixXd>& Q,
                              const Eigen::Ref<const MatrixXd>& R, double s,
                              const Eigen::Ref<const MatrixXd>& KV);

/// G with Q = G^T G (symmetric square root).
MatrixXd CostFactor(const Eigen::Ref<const MatrixXd>& Q);

}  // namespace dirinfo
