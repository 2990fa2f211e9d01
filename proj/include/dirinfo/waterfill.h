#pragma once

#include "dirinfo/linalg.h"

namespace dirinfo::waterfill {

/// Maximize over K_Z >= 0
///
///   f(K_Z) = 1/2 logdet(D K_Z D^T + K_V) - 1/2 logdet(K_V) - tr(W K_Z)
///
/// where W = sR + D^T P D aggregates the linear penalties of one step.
struct Problem {
  MatrixXd D;       // p x q
  MatrixXd KV;      // p x p, PD
  MatrixXd weight;  // q x q, PSD
};

/// f(K_Z) in nats. Throws PreconditionError if D K_Z D^T + K_V is not PD.
double Objective(const Problem& problem, const Eigen::Ref<const MatrixXd>& KZ);

/// 1/2 D^T (D K_Z D^T + K_V)^{-1} D - W, symmetrized.
MatrixXd Gradient(const Problem& problem, const Eigen::Ref<const MatrixXd>& KZ);

struct Result {
  MatrixXd KZ;
  double value = 0.0;
  int iterations = 0;
  double projected_gradient_norm = 0.0;
  /// tr(K_Z (W - 1/2 D^T (...)^{-1} D)), zero at a KKT point.
  double complementarity = 0.0;
};

struct Options {
  double tolerance = 1e-9;
  int max_iter = 50000;
};

/// Projected gradient ascent with backtracking on the PSD cone.
///
/// Throws UnboundedError when W annihilates a direction that D does not,
/// and ConvergenceError when the iteration budget runs out.
Result Solve(const Problem& problem, const Options& options = {});

struct ScalarResult {
  double kz = 0.0;  // +inf when weight == 0
  double value = 0.0;
};

/// Closed form kz = max(0, 1/(2w) - KV/D^2). Throws PreconditionError for
/// D == 0 with w == 0, KV <= 0 or w < 0.
ScalarResult ScalarSolve(double D, double KV, double weight);

}  // namespace dirinfo::waterfill
