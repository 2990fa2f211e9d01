#include "cli/run.h"

#include <cmath>
#include <fstream>
#include <ostream>
#include <thread>

#include "cli/report.h"
#include "dirinfo/capacity.h"
#include "dirinfo/errors.h"
#include "dirinfo/model_io.h"
#include "dirinfo/simulate.h"
#include "dirinfo/stability.h"
#include "dirinfo/tolerances.h"
#include "dirinfo/version.h"

namespace dirinfo::cli {
namespace {

using nlohmann::json;

double UnitScale(Units u) { return u == Units::kBits ? 1.0 / std::log(2.0) : 1.0; }

json Tolerances() {
  return {{"psd", tol::kPsd},
          {"spectral", tol::kSpectral},
          {"rank", tol::kRank},
          {"lyapunov", tol::kLyapunov},
          {"riccati", tol::kRiccati},
          {"riccati_max_iter", tol::kRiccatiMaxIter},
          {"waterfill", tol::kWaterfill},
          {"waterfill_max_iter", tol::kWaterfillMaxIter},
          {"augment_regularization", tol::kAugmentRegularization},
          {"constraint", tol::kConstraint}};
}

struct Loaded {
  ChannelModel model;
  std::optional<MemoryJModel> memory;
};

Loaded Load(const RunConfig& config) {
  LoadedModel lm = LoadModelFile(config.model_path);
  if (config.kappa) {
    lm.model.kappa = *config.kappa;
    if (lm.memory) lm.memory->kappa = *config.kappa;
  }
  if (config.horizon) {
    lm.model.horizon = *config.horizon;
    if (lm.memory) lm.memory->horizon = *config.horizon;
  }
  return {lm.model, lm.memory};
}

void RequireTimeInvariant(const ChannelModel& m, const char* what) {
  if (!m.time_invariant) {
    throw PreconditionError(std::string(what) + " requires a time-invariant model");
  }
}

json Search(const MultiplierSearch& s) {
  return {{"method", s.method},
          {"evaluations", s.evaluations},
          {"monotonicity_violations", s.monotonicity_violations},
          {"s_lo", s.s_lo},
          {"s_hi", s.s_hi}};
}

double RecomputedCost(const ChannelModel& m, const StationarySolution& sol) {
  const MatrixXd& R = m.R(0);
  return (R * sol.gain * sol.KB * sol.gain.transpose()).trace() +
         (R * sol.KZ).trace() + (m.StationaryQ() * sol.KB).trace();
}

json Solution(const ChannelModel& m, const StationarySolution& sol,
              double scale) {
  const AreClassification cls =
      ClassifyAre(sol.P, m.C(0), m.D(0), m.StationaryQ(), m.R(0), sol.s,
                  m.KVForInversion(0));
  json j;
  j["s"] = sol.s;
  j["P"] = MatrixToJson(sol.P);
  j["gain"] = MatrixToJson(sol.gain);
  j["KZ"] = MatrixToJson(sol.KZ);
  j["K"] = MatrixToJson(sol.KB);
  j["rate_nats"] = sol.rate_nats;
  j["rate"] = sol.rate_nats * scale;
  j["achieved_cost"] = sol.achieved_cost;
  j["cost_recomputed"] = RecomputedCost(m, sol);
  j["dual_value_nats"] = sol.dual_value;
  j["regime"] = ToString(sol.regime);
  j["residuals"] = {{"riccati", sol.are.residual},
                    {"lyapunov", sol.lyapunov_residual},
                    {"waterfill_projected_gradient",
                     sol.waterfill_projected_gradient},
                    {"constraint", std::abs(sol.achieved_cost - m.kappa)}};
  j["riccati"] = {{"iterations", sol.are.iterations},
                  {"stabilizing", cls.stabilizing},
                  {"closed_loop_radius", cls.closed_loop_radius},
                  {"psd", cls.psd},
                  {"stabilizable", cls.stabilizable},
                  {"detectable", cls.detectable},
                  {"noise_controllable", cls.noise_controllable},
                  {"uniqueness", ToString(cls.uniqueness)},
                  {"degenerate_detectability", sol.are.degenerate_detectability}};
  return j;
}

bool QIsZero(const ChannelModel& m) {
  return m.StationaryQ().cwiseAbs().maxCoeff() == 0.0;
}

// Closed-form comparison for scalar Q = 0 models; null when not applicable.
json ScalarOracle(const ChannelModel& m, double capacity_nats, double s_star,
                  const MatrixXd& gain, const MatrixXd& KZ, double kappa_min) {
  if (!IsScalar(m) || !m.time_invariant) return nullptr;
  if (!QIsZero(m)) {
    return {{"available", false}, {"reason", "closed form requires Q = 0"}};
  }
  const ScalarChannel sc = ScalarView(m);
  try {
    const ScalarCapacity o =
        ScalarFeedbackCapacity(sc.C, sc.D, sc.KV, sc.kappa, sc.R);
    json j;
    j["available"] = true;
    j["capacity_nats"] = o.capacity_nats;
    j["gain"] = o.gain;
    j["kz"] = o.kz;
    j["kappa_min"] = o.kappa_min;
    j["s_star"] = o.s_star;
    j["regime"] = ToString(o.regime);
    j["deltas"] = {{"capacity_nats", std::abs(capacity_nats - o.capacity_nats)},
                   {"gain", std::abs(gain(0, 0) - o.gain)},
                   {"kz", std::abs(KZ(0, 0) - o.kz)},
                   {"kappa_min", std::abs(kappa_min - o.kappa_min)},
                   {"s_star", std::abs(s_star - o.s_star)}};
    return j;
  } catch (const PreconditionError& e) {
    return {{"available", false}, {"reason", e.what()}};
  }
}

json RunCheck(const RunConfig&, const Loaded& in, int& exit_code) {
  const ChannelModel& m = in.model;
  json r;
  json issues = json::array();
  for (const auto& issue : ValidateModel(m)) {
    issues.push_back(
        {{"code", issue.code}, {"message", issue.message}, {"index", issue.index}});
  }
  r["valid"] = issues.empty();
  r["issues"] = issues;
  r["output_dim"] = m.output_dim;
  r["input_dim"] = m.input_dim;
  r["time_invariant"] = m.time_invariant;
  if (!issues.empty()) {
    exit_code = 1;
    return r;
  }
  if (!m.time_invariant) return r;
  const MatrixXd& C = m.C(0);
  const MatrixXd& D = m.D(0);
  const MatrixXd G = CostFactor(m.StationaryQ());
  const SpectrumReport spec = SpectralRadius(C);
  const bool stabilizable = IsStabilizable(C, D);
  const bool detectable = IsDetectable(G, C);
  r["spectral_radius"] = spec.spectral_radius;
  r["open_loop_stable"] = spec.stable;
  r["controllable"] = IsControllable(C, D);
  r["stabilizable"] = stabilizable;
  r["observable"] = IsObservable(G, C);
  r["detectable"] = detectable;
  r["noise_controllable"] =
      IsControllable(C, SymmetricSqrt(m.KVForInversion(0)));
  r["are_uniqueness"] = ToString(stabilizable && detectable ? Uniqueness::kUnique
                                 : stabilizable             ? Uniqueness::kConditional
                                                            : Uniqueness::kNone);
  if (stabilizable) r["kappa_min"] = KappaMin(m);
  return r;
}

json RunCapacity(const RunConfig& config, const Loaded& in) {
  const ChannelModel& m = EnsureValid(in.model);
  RequireTimeInvariant(m, "capacity");
  const double scale = UnitScale(config.units);
  json r;
  if (config.s) {
    const StationarySolution sol = StationarySolve(m, *config.s);
    r["mode"] = "fixed_multiplier";
    r["solution"] = Solution(m, sol, scale);
    r["regime"] = ToString(sol.regime);
    r["s_star"] = sol.s;
    return r;
  }
  const FeedbackCapacityResult res = FeedbackCapacity(m);
  r["mode"] = "constrained";
  r["solution"] = Solution(m, res.solution, scale);
  r["regime"] = ToString(res.solution.regime);
  r["capacity_nats"] = res.capacity_nats;
  r["capacity"] = res.capacity_nats * scale;
  r["s_star"] = res.s_star;
  r["gain"] = MatrixToJson(res.solution.gain);
  r["KZ"] = MatrixToJson(res.solution.KZ);
  r["K"] = MatrixToJson(res.solution.KB);
  r["kappa_min"] = res.kappa_min;
  r["below_kappa_min"] = res.below_kappa_min;
  r["kappa_min_extended"] = res.kappa_min_extended;
  r["search"] = Search(res.search);
  r["notes"] = res.notes;
  if (res.lower_bound) {
    const LowerBoundCheck& lb = *res.lower_bound;
    r["lower_bound"] = {{"bound_nats", lb.bound_nats},
                        {"threshold_kappa", lb.threshold_kappa},
                        {"applicable", lb.applicable},
                        {"holds", lb.holds}};
  }
  json oracle = ScalarOracle(m, res.capacity_nats, res.s_star,
                             res.solution.gain, res.solution.KZ, res.kappa_min);
  if (!oracle.is_null()) {
    r["oracle"] = oracle;
    if (oracle.value("available", false)) {
      r["oracle_delta"] = oracle["deltas"]["capacity_nats"];
    }
  }
  return r;
}

json RunFtfi(const RunConfig& config, const Loaded& in) {
  const ChannelModel& m = EnsureValid(in.model);
  const double scale = UnitScale(config.units);
  json r;
  FiniteHorizonSolution sol;
  if (config.s) {
    sol = FiniteHorizonDp(m, *config.s);
    r["mode"] = "fixed_multiplier";
    r["rate_nats"] = sol.information_nats / m.steps();
    r["rate"] = sol.information_nats / m.steps() * scale;
  } else {
    const FtfiResult res = FtfiCapacity(m);
    sol = res.solution;
    r["mode"] = "constrained";
    r["capacity_nats"] = res.capacity_nats;
    r["capacity"] = res.capacity_nats * scale;
    r["minimum_cost"] = res.minimum_cost;
    r["search"] = Search(res.search);
    r["residuals"] = {{"constraint", std::abs(sol.achieved_cost - m.kappa)}};
  }
  r["s_star"] = sol.s;
  r["horizon"] = m.horizon;
  r["steps"] = m.steps();
  r["information_nats"] = sol.information_nats;
  r["value_nats"] = sol.value_nats;
  r["achieved_cost"] = sol.achieved_cost;
  r["P0"] = MatrixToJson(sol.P_seq.front());
  r["gain"] = MatrixToJson(sol.strategy.Gain(0));
  r["KZ"] = MatrixToJson(sol.strategy.Innovation(0));
  json gains = json::array();
  json innovations = json::array();
  for (int i = 0; i < m.steps(); ++i) {
    gains.push_back(MatrixToJson(sol.strategy.Gain(i)));
    innovations.push_back(MatrixToJson(sol.strategy.Innovation(i)));
  }
  r["gains"] = gains;
  r["innovations"] = innovations;
  r["step_rates_nats"] = sol.step_rates;
  r["step_costs"] = sol.step_costs;
  return r;
}

json RunNofeedback(const RunConfig& config, const Loaded& in) {
  const ChannelModel& m = EnsureValid(in.model);
  RequireTimeInvariant(m, "nofeedback");
  const double scale = UnitScale(config.units);
  const double c = NofeedbackCapacityQ0(m);
  json r;
  r["capacity_nats"] = c;
  r["capacity"] = c * scale;
  r["open_loop_stable"] = SpectralRadius(m.C(0)).stable;
  try {
    const double fb = FeedbackCapacity(m).capacity_nats;
    r["feedback_capacity_nats"] = fb;
    r["feedback_gain_nats"] = fb - c;
  } catch (const Error& e) {
    r["feedback_capacity_error"] = e.what();
  }
  return r;
}

json HistogramJson(const Histogram& h) {
  return {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}};
}

json Horizon(const HorizonCheck& h) {
  return {{"steps", h.steps},
          {"rate_violation_fraction", h.rate_violation_fraction},
          {"cost_violation_fraction", h.cost_violation_fraction},
          {"max_rate_deviation_nats", h.max_rate_deviation},
          {"max_cost_deviation", h.max_cost_deviation}};
}

json RunSimulate(const RunConfig& config, const Loaded& in) {
  const ChannelModel& m = EnsureValid(in.model);
  RequireTimeInvariant(m, "simulate");
  const double scale = UnitScale(config.units);
  json r;
  StationarySolution sol;
  if (config.s) {
    sol = StationarySolve(m, *config.s);
    r["mode"] = "fixed_multiplier";
  } else {
    const FeedbackCapacityResult res = FeedbackCapacity(m);
    sol = res.solution;
    r["mode"] = "constrained";
    r["capacity_nats"] = res.capacity_nats;
    r["capacity"] = res.capacity_nats * scale;
  }
  r["solution"] = Solution(m, sol, scale);
  r["regime"] = ToString(sol.regime);
  r["s_star"] = sol.s;

  const double cost_eps =
      config.cost_epsilon.value_or(0.05 * std::max(m.kappa, 1.0));
  const auto traces = SampleBatch(m, sol.AsStrategy(), config.steps,
                                  config.first_seed, config.seeds,
                                  config.threads.value_or(0));
  const StabilityReport rep = MakeStabilityReport(
      traces, sol.rate_nats, sol.achieved_cost, config.rate_epsilon, cost_eps);
  json rates = json::array();
  for (double x : rep.terminal_rates) rates.push_back(x * scale);
  r["stability"] = {{"traces", rep.traces},
                    {"steps", config.steps},
                    {"first_seed", config.first_seed},
                    {"target_rate_nats", rep.target_rate},
                    {"target_rate", rep.target_rate * scale},
                    {"target_cost", rep.target_cost},
                    {"rate_epsilon_nats", rep.rate_epsilon},
                    {"cost_epsilon", rep.cost_epsilon},
                    {"early", Horizon(rep.early)},
                    {"terminal", Horizon(rep.terminal)},
                    {"terminal_rates_nats", rep.terminal_rates},
                    {"terminal_rates", rates},
                    {"terminal_costs", rep.terminal_costs},
                    {"rate_deviation_histogram", HistogramJson(rep.rate_deviation)},
                    {"cost_deviation_histogram", HistogramJson(rep.cost_deviation)},
                    {"concentrating", rep.concentrating},
                    {"passed", rep.passed}};
  if (!config.trace_csv.empty() && !traces.empty()) {
    std::ofstream out(config.trace_csv);
    if (!out) throw Error("cannot write trace CSV '" + config.trace_csv + "'");
    WriteTraceCsv(traces.front(), out);
    r["trace_csv"] = config.trace_csv;
  }
  return r;
}

const std::vector<std::string> kSweepColumns = {
    "param",       "value",       "status",        "regime",
    "capacity",    "capacity_nats", "s_star",      "kappa_min",
    "achieved_cost", "oracle_delta", "error"};

json SweepCell(const ChannelModel& base, const RunConfig& config, double v) {
  const double scale = UnitScale(config.units);
  json cell = {{"param", config.sweep_param}, {"value", v}};
  try {
    ChannelModel m = base;
    if (config.sweep_param == "kappa") {
      m.kappa = v;
    } else {
      m.C_seq = {MatrixXd::Constant(1, 1, v)};
    }
    EnsureValid(m);
    const FeedbackCapacityResult res = FeedbackCapacity(m);
    cell["status"] = "ok";
    cell["regime"] = ToString(res.solution.regime);
    cell["capacity_nats"] = res.capacity_nats;
    cell["capacity"] = res.capacity_nats * scale;
    cell["s_star"] = res.s_star;
    cell["kappa_min"] = res.kappa_min;
    cell["achieved_cost"] = res.solution.achieved_cost;
    json oracle = ScalarOracle(m, res.capacity_nats, res.s_star,
                               res.solution.gain, res.solution.KZ,
                               res.kappa_min);
    if (!oracle.is_null() && oracle.value("available", false)) {
      cell["oracle_delta"] = oracle["deltas"]["capacity_nats"];
    }
  } catch (const Error& e) {
    cell["status"] = "error";
    cell["error"] = e.what();
  }
  return cell;
}

json RunSweep(const RunConfig& config, const Loaded& in,
              std::vector<json>& cells, int& exit_code) {
  const ChannelModel& m = in.model;
  RequireTimeInvariant(m, "sweep");
  if (config.sweep_param == "C" && !IsScalar(m)) {
    throw PreconditionError("a C sweep requires a scalar model");
  }
  const int n = static_cast<int>(config.sweep_values.size());
  cells.assign(n, json());
  const int workers =
      std::max(1, std::min(config.threads.value_or(DefaultThreadCount()), n));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) {
        cells[i] = SweepCell(m, config, config.sweep_values[i]);
      }
    });
  }
  for (auto& t : pool) t.join();
  json r;
  r["param"] = config.sweep_param;
  r["cells"] = cells;
  for (const auto& c : cells) {
    if (c["status"] != "ok") exit_code = 1;
  }
  return r;
}

}  // namespace

RunOutcome Run(const RunConfig& config) {
  RunOutcome out;
  json& r = out.report;
  r["command"] = ToString(config.command);
  r["version"] = kVersion;
  r["tolerances"] = Tolerances();
  r["units"] = ToString(config.units);
  r["inputs"] = {{"config", ConfigToJson(config)}};
  std::vector<json> cells;
  try {
    const Loaded in = Load(config);
    r["inputs"]["model"] = in.memory ? MemoryModelToJson(*in.memory)
                                     : ModelToJson(in.model);
    if (in.model.augmentation) {
      const AugmentationInfo& a = *in.model.augmentation;
      r["augmentation"] = {{"channel_memory", a.channel_memory},
                           {"cost_memory", a.cost_memory},
                           {"order", a.order},
                           {"base_output_dim", a.base_output_dim},
                           {"regularization", a.regularization}};
    }
    json body;
    switch (config.command) {
      case Command::kCheck:
        body = RunCheck(config, in, out.exit_code);
        break;
      case Command::kCapacity:
        body = RunCapacity(config, in);
        break;
      case Command::kFtfi:
        body = RunFtfi(config, in);
        break;
      case Command::kNofeedback:
        body = RunNofeedback(config, in);
        break;
      case Command::kSimulate:
        body = RunSimulate(config, in);
        break;
      case Command::kSweep:
        body = RunSweep(config, in, cells, out.exit_code);
        break;
    }
    for (auto it = body.begin(); it != body.end(); ++it) r[it.key()] = it.value();
    r["status"] = out.exit_code == 0 ? "ok" : "error";
    if (out.exit_code != 0) out.error = "command reported failures";
  } catch (const InfeasibleError& e) {
    out.exit_code = 1;
    out.error = e.what();
    r["status"] = "error";
    r["error"] = e.what();
    r["minimum_cost"] = e.minimum_cost();
  } catch (const std::exception& e) {
    out.exit_code = 1;
    out.error = e.what();
    r["status"] = "error";
    r["error"] = e.what();
  }
  if (config.format == Format::kCsv && config.command == Command::kSweep &&
      !cells.empty()) {
    out.document = EmitCsv(cells, kSweepColumns);
  } else {
    out.document = EmitJson(r);
  }
  return out;
}

int Main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err) {
  ParseResult parsed;
  try {
    parsed = ParseConfig(args);
  } catch (const UsageError& e) {
    err << "dirinfo: " << e.what() << "\nRun 'dirinfo --help' for usage.\n";
    return 2;
  }
  if (parsed.help) {
    out << parsed.text;
    return 0;
  }
  const RunConfig& config = parsed.config;
  RunOutcome outcome;
  if (config.dump_config) {
    outcome.document = EmitJson(ConfigToJson(config));
  } else {
    outcome = Run(config);
    if (!outcome.error.empty()) err << "dirinfo: error: " << outcome.error << "\n";
  }
  if (config.output.empty()) {
    out << outcome.document;
  } else {
    std::ofstream file(config.output, std::ios::binary);
    if (!(file << outcome.document) || !file.flush()) {
      err << "dirinfo: error: cannot write output '" << config.output << "'\n";
      return 1;
    }
  }
  return outcome.exit_code;
}

}  // namespace dirinfo::cli
