#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dirinfo/model.h"
#include "dirinfo/riccati.h"

namespace dirinfo {

enum class Regime {
  kStableNoFeedback,     // Gamma* = 0, K_Z* != 0
  kUnstableStabilized,   // Gamma* != 0 stabilizes an unstable channel
  kStateCostFeedback,    // Gamma* != 0 on a stable channel (Q != 0)
  kZeroRate,             // K_Z* = 0
};

const char* ToString(Regime regime);

/// How the Lagrange multiplier was located.
struct MultiplierSearch {
  std::string method = "bisection";  // or "golden_section_dual"
  int evaluations = 0;
  int monotonicity_violations = 0;
  double s_lo = 0.0;
  double s_hi = 0.0;
};

/// Backward dynamic programming solution for a fixed multiplier s.
struct FiniteHorizonSolution {
  double s = 0.0;
  std::vector<MatrixXd> P_seq;  // P(0..n)
  std::vector<double> r_seq;    // r(0..n)
  Strategy strategy;            // (Gamma_i, K_{Z_i}), i = 0..n
  /// Second moments E[B_i B_i^T] for i = -1..n (length n + 2).
  std::vector<MatrixXd> KB_seq;
  std::vector<double> step_rates;  // 1/2 logdet ratio per step, nats
  std::vector<double> step_costs;  // expected cost per step
  double achieved_cost = 0.0;      // per unit time
  double information_nats = 0.0;   // sum of step_rates
  /// -E<b_{-1}, P(0) b_{-1}> + r(0).
  double value_nats = 0.0;
};

/// Requires a valid model and s > 0.
FiniteHorizonSolution FiniteHorizonDp(const ChannelModel& model, double s);

struct FtfiResult {
  FiniteHorizonSolution solution;
  double s_star = 0.0;
  /// Directed information per unit time at s*, nats.
  double capacity_nats = 0.0;
  /// Cost of the optimal feedback gains with K_Z = 0.
  double minimum_cost = 0.0;
  MultiplierSearch search;
};

/// Matches the average cost to kappa by a search on s. Throws
/// InfeasibleError when kappa is below the minimum achievable cost.
FtfiResult FtfiCapacity(const ChannelModel& model);

/// Stationary strategy for a fixed multiplier on a time-invariant model.
struct StationarySolution {
  double s = 0.0;
  AreSolution are;
  MatrixXd P;
  MatrixXd gain;   // Gamma*
  MatrixXd KZ;     // K_Z*
  MatrixXd KB;     // invariant output covariance K
  double rate_nats = 0.0;
  double achieved_cost = 0.0;
  /// J = sup_{K_Z}{...} + s kappa - tr(P K_V); equals
  /// rate - s (cost - kappa).
  double dual_value = 0.0;
  double lyapunov_residual = 0.0;
  double waterfill_projected_gradient = 0.0;
  Regime regime = Regime::kZeroRate;

  Strategy AsStrategy() const { return Strategy{{gain}, {KZ}}; }
};

StationarySolution StationarySolve(const ChannelModel& model, double s);

/// Cost tr(R Gamma K Gamma^T + Q K) of the stabilizing gain with K_Z = 0.
/// Throws PreconditionError on unstabilizable channels.
double KappaMin(const ChannelModel& model);

/// Checks the ln|C| lower bound for unstable scalar channels where the
/// closed form supports it.
struct LowerBoundCheck {
  double bound_nats = 0.0;       // ln|C|
  double threshold_kappa = 0.0;  // (C^4 - 1) K_V R / D^2
  bool applicable = false;       // kappa >= threshold_kappa
  bool holds = false;
};

/// Text attached to reports on unstable scalar channels.
extern const char* const kLowerBoundNote;

struct FeedbackCapacityResult {
  StationarySolution solution;
  double capacity_nats = 0.0;
  double s_star = 0.0;
  double kappa_min = 0.0;
  /// kappa < kappa_min: the budget cannot even pay for stabilization.
  bool below_kappa_min = false;
  /// p > 1: kappa_min is the K_Z = 0 stabilization cost, which extends the
  /// scalar definition.
  bool kappa_min_extended = false;
  MultiplierSearch search;
  std::optional<LowerBoundCheck> lower_bound;
  std::vector<std::string> notes;
};

FeedbackCapacityResult FeedbackCapacity(const ChannelModel& model);

struct ScalarCapacity {
  double capacity_nats = 0.0;
  double gain = 0.0;
  double kz = 0.0;
  double kappa_min = 0.0;
  double s_star = 0.0;
  Regime regime = Regime::kZeroRate;
};

/// Three-branch closed form for p = q = 1, Q = 0. R != 1 is handled by
/// rescaling the input. Throws PreconditionError when |C| is within
/// tol::kSpectral of 1, D == 0 or KV <= 0.
ScalarCapacity ScalarFeedbackCapacity(double C, double D, double KV,
                                      double kappa, double R = 1.0);

/// Capacity without feedback for Q = 0: trace-constrained water-filling for
/// stable C, zero for unstable C. Throws PreconditionError if Q != 0.
double NofeedbackCapacityQ0(const ChannelModel& model);

/// Expected per-step costs and rates of an arbitrary strategy, propagating
/// second moments from the initial output.
struct ForwardPass {
  std::vector<MatrixXd> KB_seq;
  std::vector<double> step_rates;
  std::vector<double> step_costs;
  double achieved_cost = 0.0;
  double information_nats = 0.0;
};

ForwardPass EvaluateStrategy(const ChannelModel& model,
                             const Strategy& strategy);

}  // namespace dirinfo
