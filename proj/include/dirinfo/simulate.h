#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dirinfo/model.h"
#include "dirinfo/random.h"

namespace dirinfo {

/// One sampled closed-loop path. Paths are stored column-wise: column i holds
/// step i (i = 0..steps-1).
struct SimulationTrace {
  uint64_t seed = 0;
  int steps = 0;
  MatrixXd B_path;  // p x steps
  MatrixXd A_path;  // q x steps
  std::vector<double> info_density_path;  // per-step log-likelihood ratio
  std::vector<double> cost_path;          // <a, R a> + <b_{i-1}, Q b_{i-1}>
  std::vector<double> running_rate;       // partial means of info density
  std::vector<double> running_cost;       // partial means of cost
};

/// Maps a point u in (0,1)^q to K_Z^{1/2} Phi^{-1}(u): uniform draws pushed
/// through the normal quantile and the symmetric square root of K_Z.
/// Throws std::domain_error when a coordinate is 0 or 1.
VectorXd InnovationFromUniform(const Eigen::Ref<const VectorXd>& u,
                               const Eigen::Ref<const MatrixXd>& KZ);

/// Channel data of one step as seen by the density computation.
struct ChannelStep {
  MatrixXd C;
  MatrixXd D;
  MatrixXd KV;  // must be PD (use KVForInversion for augmented models)
};

struct StrategyStep {
  MatrixXd gain;
  MatrixXd KZ;
};

/// log N(b; C b_prev + D a, K_V) - log N(b; (C + D Gamma) b_prev,
/// D K_Z D^T + K_V), nats. Throws PreconditionError on singular covariances.
double InfoDensityStep(const Eigen::Ref<const VectorXd>& b_prev,
                       const Eigen::Ref<const VectorXd>& a,
                       const Eigen::Ref<const VectorXd>& b,
                       const ChannelStep& channel, const StrategyStep& strategy);

/// Simulates B_i = C B_{i-1} + D A_i + V_i under A_i = Gamma B_{i-1} + Z_i.
///
/// Each step consumes q uniforms for Z_i, then p uniforms for V_i (only the
/// driven block of an augmented model), from a Philox stream keyed by `seed`.
/// Time-varying models need steps <= horizon + 1.
SimulationTrace SampleTrajectory(const ChannelModel& model,
                                 const Strategy& strategy, int steps,
                                 uint64_t seed);

/// Independent traces for seeds first_seed .. first_seed + count - 1, run on
/// up to `threads` workers (0: DefaultThreadCount()).
std::vector<SimulationTrace> SampleBatch(const ChannelModel& model,
                                         const Strategy& strategy, int steps,
                                         uint64_t first_seed, int count,
                                         int threads = 0);

/// Hardware concurrency capped by the DIRINFO_THREADS environment variable.
int DefaultThreadCount();

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> counts;
};

struct HorizonCheck {
  int steps = 0;
  double rate_violation_fraction = 0.0;
  double cost_violation_fraction = 0.0;
  double max_rate_deviation = 0.0;
  double max_cost_deviation = 0.0;
};

/// Empirical information-stability check over a batch of traces.
struct StabilityReport {
  int traces = 0;
  double target_rate = 0.0;
  double target_cost = 0.0;
  double rate_epsilon = 0.0;
  double cost_epsilon = 0.0;
  HorizonCheck early;     // at steps / 10
  HorizonCheck terminal;  // at the full length
  std::vector<double> terminal_rates;
  std::vector<double> terminal_costs;
  Histogram rate_deviation;
  Histogram cost_deviation;
  /// Violation fractions do not grow from the early to the terminal horizon.
  bool concentrating = false;
  bool passed = false;  // concentrating and no terminal violation
};

StabilityReport MakeStabilityReport(const std::vector<SimulationTrace>& traces,
                                    double target_rate, double target_cost,
                                    double rate_epsilon, double cost_epsilon,
                                    int histogram_bins = 20);

/// CSV with columns step, b0.., a0.., info_density, cost, running_rate.
void WriteTraceCsv(const SimulationTrace& trace, std::ostream& out);

}  // namespace dirinfo
