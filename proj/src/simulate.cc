#include "dirinfo/simulate.h"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "dirinfo/errors.h"

namespace dirinfo {
namespace {

// Per-step quantities reused along a path.
struct StepKernel {
  MatrixXd C, D, R, Q, gain;
  MatrixXd KZ_root;
  MatrixXd KV_root;  // base-block factor (p_base x p_base)
  Eigen::LLT<MatrixXd> KV_llt;
  Eigen::LLT<MatrixXd> W_llt;
  double half_logdet_kv = 0.0;
  double half_logdet_w = 0.0;
};

StepKernel MakeKernel(const ChannelModel& model, const Strategy& strategy,
                      int i) {
  StepKernel k;
  k.C = model.C(i);
  k.D = model.D(i);
  k.R = model.R(i);
  k.Q = model.Q(i);
  k.gain = strategy.Gain(i);
  const MatrixXd& KZ = strategy.Innovation(i);
  k.KZ_root = SymmetricSqrt(KZ);
  const int base = model.augmentation ? model.augmentation->base_output_dim
                                      : model.output_dim;
  k.KV_root = SymmetricSqrt(model.KV(i).topLeftCorner(base, base));
  const MatrixXd KVinv = model.KVForInversion(i);
  k.KV_llt.compute(KVinv);
  const MatrixXd W = Symmetrize(k.D * KZ * k.D.transpose() + KVinv);
  k.W_llt.compute(W);
  if (k.KV_llt.info() != Eigen::Success || k.W_llt.info() != Eigen::Success) {
    throw PreconditionError("covariance factorization failed in simulation");
  }
  k.half_logdet_kv = k.KV_llt.matrixLLT().diagonal().array().log().sum();
  k.half_logdet_w = k.W_llt.matrixLLT().diagonal().array().log().sum();
  return k;
}

double Density(const StepKernel& k, const VectorXd& b_prev, const VectorXd& a,
               const VectorXd& b) {
  const VectorXd mean_prev = k.C * b_prev;
  const VectorXd r_channel = b - mean_prev - k.D * a;
  const VectorXd r_output = b - mean_prev - k.D * (k.gain * b_prev);
  const double q_channel = r_channel.dot(k.KV_llt.solve(r_channel));
  const double q_output = r_output.dot(k.W_llt.solve(r_output));
  return 0.5 * (q_output - q_channel) + (k.half_logdet_w - k.half_logdet_kv);
}

VectorXd Normals(Philox4x32& rng, Eigen::Index n) {
  VectorXd out(n);
  for (Eigen::Index j = 0; j < n; ++j) out(j) = rng.NextNormal();
  return out;
}

}  // namespace

VectorXd InnovationFromUniform(const Eigen::Ref<const VectorXd>& u,
                               const Eigen::Ref<const MatrixXd>& KZ) {
  if (KZ.rows() != u.size() || KZ.cols() != u.size()) {
    throw DimensionError("dimension mismatch: K_Z must be q x q for q "
                         "uniforms");
  }
  VectorXd normal(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) normal(j) = NormalQuantile(u(j));
  return SymmetricSqrt(KZ) * normal;
}

double InfoDensityStep(const Eigen::Ref<const VectorXd>& b_prev,
                       const Eigen::Ref<const VectorXd>& a,
                       const Eigen::Ref<const VectorXd>& b,
                       const ChannelStep& channel,
                       const StrategyStep& strategy) {
  StepKernel k;
  k.C = channel.C;
  k.D = channel.D;
  k.gain = strategy.gain;
  k.KV_llt.compute(channel.KV);
  k.W_llt.compute(
      Symmetrize(channel.D * strategy.KZ * channel.D.transpose() + channel.KV));
  if (k.KV_llt.info() != Eigen::Success || k.W_llt.info() != Eigen::Success) {
    throw PreconditionError("singular covariance in information density");
  }
  k.half_logdet_kv = k.KV_llt.matrixLLT().diagonal().array().log().sum();
  k.half_logdet_w = k.W_llt.matrixLLT().diagonal().array().log().sum();
  return Density(k, b_prev, a, b);
}

SimulationTrace SampleTrajectory(const ChannelModel& model,
                                 const Strategy& strategy, int steps,
                                 uint64_t seed) {
  EnsureValid(model);
  if (steps < 1) throw PreconditionError("steps must be >= 1");
  if (const auto issues = ValidateStrategy(strategy, model); !issues.empty()) {
    throw PreconditionError("invalid strategy: " + issues.front().message);
  }
  const bool stationary = model.time_invariant && strategy.stationary();
  if (!stationary && steps > model.steps()) {
    throw PreconditionError("time-varying simulation longer than the horizon");
  }

  const int p = model.output_dim;
  const int q = model.input_dim;
  const int base = model.augmentation ? model.augmentation->base_output_dim : p;

  SimulationTrace trace;
  trace.seed = seed;
  trace.steps = steps;
  trace.B_path.resize(p, steps);
  trace.A_path.resize(q, steps);
  trace.info_density_path.resize(steps);
  trace.cost_path.resize(steps);
  trace.running_rate.resize(steps);
  trace.running_cost.resize(steps);

  Philox4x32 rng(seed);
  VectorXd b_prev = model.InitialMean();
  if (const auto* g = std::get_if<GaussianInitialOutput>(&model.initial_output)) {
    b_prev = g->mean + SymmetricSqrt(g->covariance) * Normals(rng, p);
  }

  std::vector<StepKernel> kernels;
  if (stationary) kernels.push_back(MakeKernel(model, strategy, 0));
  double rate_sum = 0.0;
  double cost_sum = 0.0;
  VectorXd v = VectorXd::Zero(p);
  for (int i = 0; i < steps; ++i) {
    if (!stationary) {
      kernels.clear();
      kernels.push_back(MakeKernel(model, strategy, i));
    }
    const StepKernel& k = kernels.front();
    const VectorXd z = k.KZ_root * Normals(rng, q);
    const VectorXd a = k.gain * b_prev + z;
    v.head(base) = k.KV_root * Normals(rng, base);
    const VectorXd b = k.C * b_prev + k.D * a + v;

    const double cost = a.dot(k.R * a) + b_prev.dot(k.Q * b_prev);
    const double density = Density(k, b_prev, a, b);
    trace.B_path.col(i) = b;
    trace.A_path.col(i) = a;
    trace.info_density_path[i] = density;
    trace.cost_path[i] = cost;
    rate_sum += density;
    cost_sum += cost;
    trace.running_rate[i] = rate_sum / (i + 1);
    trace.running_cost[i] = cost_sum / (i + 1);
    b_prev = b;
  }
  return trace;
}

int DefaultThreadCount() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("DIRINFO_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

std::vector<SimulationTrace> SampleBatch(const ChannelModel& model,
                                         const Strategy& strategy, int steps,
                                         uint64_t first_seed, int count,
                                         int threads) {
  if (count < 0) throw PreconditionError("trace count must be >= 0");
  std::vector<SimulationTrace> traces(count);
  const int workers =
      std::max(1, std::min(threads > 0 ? threads : DefaultThreadCount(),
                           std::max(count, 1)));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](int w) {
    try {
      for (int t = w; t < count; t += workers) {
        traces[t] = SampleTrajectory(model, strategy, steps, first_seed + t);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return traces;
}

namespace {

Histogram MakeHistogram(const std::vector<double>& values, double half_width,
                        int bins) {
  Histogram h;
  h.lo = -half_width;
  h.hi = half_width;
  h.counts.assign(std::max(bins, 1), 0);
  for (double x : values) {
    const double t = (x - h.lo) / (h.hi - h.lo);
    int bin = static_cast<int>(std::floor(t * h.counts.size()));
    bin = std::clamp(bin, 0, static_cast<int>(h.counts.size()) - 1);
    ++h.counts[bin];
  }
  return h;
}

HorizonCheck CheckAt(const std::vector<SimulationTrace>& traces, int index,
                     double target_rate, double target_cost,
                     double rate_epsilon, double cost_epsilon) {
  HorizonCheck h;
  h.steps = index + 1;
  int rate_bad = 0;
  int cost_bad = 0;
  for (const auto& t : traces) {
    const double dr = std::abs(t.running_rate[index] - target_rate);
    const double dc = std::abs(t.running_cost[index] - target_cost);
    h.max_rate_deviation = std::max(h.max_rate_deviation, dr);
    h.max_cost_deviation = std::max(h.max_cost_deviation, dc);
    rate_bad += dr > rate_epsilon;
    cost_bad += dc > cost_epsilon;
  }
  const double n = static_cast<double>(traces.size());
  h.rate_violation_fraction = rate_bad / n;
  h.cost_violation_fraction = cost_bad / n;
  return h;
}

}  // namespace

StabilityReport MakeStabilityReport(const std::vector<SimulationTrace>& traces,
                                    double target_rate, double target_cost,
                                    double rate_epsilon, double cost_epsilon,
                                    int histogram_bins) {
  StabilityReport r;
  r.traces = static_cast<int>(traces.size());
  r.target_rate = target_rate;
  r.target_cost = target_cost;
  r.rate_epsilon = rate_epsilon;
  r.cost_epsilon = cost_epsilon;
  if (traces.empty()) return r;
  int steps = traces.front().steps;
  for (const auto& t : traces) steps = std::min(steps, t.steps);
  const int early = std::max(1, steps / 10);
  r.early = CheckAt(traces, early - 1, target_rate, target_cost, rate_epsilon,
                    cost_epsilon);
  r.terminal = CheckAt(traces, steps - 1, target_rate, target_cost,
                       rate_epsilon, cost_epsilon);
  std::vector<double> rate_dev;
  std::vector<double> cost_dev;
  for (const auto& t : traces) {
    r.terminal_rates.push_back(t.running_rate[steps - 1]);
    r.terminal_costs.push_back(t.running_cost[steps - 1]);
    rate_dev.push_back(r.terminal_rates.back() - target_rate);
    cost_dev.push_back(r.terminal_costs.back() - target_cost);
  }
  r.rate_deviation = MakeHistogram(
      rate_dev, std::max(2.0 * rate_epsilon, r.terminal.max_rate_deviation),
      histogram_bins);
  r.cost_deviation = MakeHistogram(
      cost_dev, std::max(2.0 * cost_epsilon, r.terminal.max_cost_deviation),
      histogram_bins);
  r.concentrating =
      r.terminal.rate_violation_fraction <= r.early.rate_violation_fraction &&
      r.terminal.cost_violation_fraction <= r.early.cost_violation_fraction;
  r.passed = r.concentrating && r.terminal.rate_violation_fraction == 0.0 &&
             r.terminal.cost_violation_fraction == 0.0;
  return r;
}

void WriteTraceCsv(const SimulationTrace& trace, std::ostream& out) {
  out << "step";
  for (Eigen::Index j = 0; j < trace.B_path.rows(); ++j) out << ",b" << j;
  for (Eigen::Index j = 0; j < trace.A_path.rows(); ++j) out << ",a" << j;
  out << ",info_density,cost,running_rate\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
  };
  for (int i = 0; i < trace.steps; ++i) {
    out << i;
    for (Eigen::Index j = 0; j < trace.B_path.rows(); ++j) {
      out << ',' << num(trace.B_path(j, i));
    }
    for (Eigen::Index j = 0; j < trace.A_path.rows(); ++j) {
      out << ',' << num(trace.A_path(j, i));
    }
    out << ',' << num(trace.info_density_path[i]);
    out << ',' << num(trace.cost_path[i]);
    out << ',' << num(trace.running_rate[i]) << '\n';
  }
}

}  // namespace dirinfo
