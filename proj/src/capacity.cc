#include "dirinfo/capacity.h"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <limits>

#include "dirinfo/errors.h"
#include "dirinfo/stability.h"
#include "dirinfo/tolerances.h"
#include "dirinfo/waterfill.h"

namespace dirinfo {

const char* const kLowerBoundNote =
    "universal lower bound ln|C| is stated for every kappa >= kappa_min, but "
    "the closed form gives K_Z* = 0 and capacity 0 at kappa = kappa_min; "
    "1/2 ln((D^2 kappa + K_V)/(C^2 K_V)) reaches ln|C| only for "
    "kappa >= (C^4 - 1) K_V / D^2, so the bound is checked only there";

namespace {

constexpr double kZeroTol = 1e-10;

double HalfLogDetRatio(const MatrixXd& D, const MatrixXd& KZ,
                       const MatrixXd& KVinv) {
  const MatrixXd S = D * KZ * D.transpose() + KVinv;
  return 0.5 * (LogDetSpd(S) - LogDetSpd(KVinv));
}

void RequireTimeInvariant(const ChannelModel& model) {
  if (!model.time_invariant) {
    throw PreconditionError("model is not time-invariant");
  }
}

bool IsZero(const MatrixXd& m) {
  return m.size() == 0 || m.cwiseAbs().maxCoeff() <= kZeroTol;
}

// Smallest s for which the water-fill with weight s * base is K_Z = 0:
// largest generalized eigenvalue of (1/2 D^T K_V^{-1} D, base).
double ZeroInnovationThreshold(const MatrixXd& D, const MatrixXd& KVinv,
                               const MatrixXd& base) {
  const MatrixXd A = Symmetrize(0.5 * D.transpose() * KVinv.llt().solve(D));
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(
      A, Symmetrize(base), Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

bool Within(double cost, double kappa) {
  return std::abs(cost - kappa) <= tol::kConstraint * (1.0 + kappa);
}

// Finds s with cost(s) = kappa for a cost that decreases in s from +inf
// (s -> 0) to below kappa (s large). Falls back to minimizing the convex dual
// function when a monotonicity violation is observed.
double SearchMultiplier(double kappa,
                        const std::function<double(double)>& cost,
                        const std::function<double(double)>& dual,
                        MultiplierSearch* info) {
  auto eval = [&](double s) {
    ++info->evaluations;
    return cost(s);
  };
  double lo = 1.0;
  double hi = 1.0;
  double c_lo = eval(1.0);
  double c_hi = c_lo;
  if (Within(c_lo, kappa)) {
    info->s_lo = info->s_hi = 1.0;
    return 1.0;
  }
  if (c_lo > kappa) {
    do {
      lo = hi;
      c_lo = c_hi;
      hi *= 2.0;
      if (hi > 1e300) throw ConvergenceError("multiplier search diverged");
      c_hi = eval(hi);
    } while (c_hi > kappa);
  } else {
    do {
      hi = lo;
      c_hi = c_lo;
      lo *= 0.5;
      if (lo < 1e-300) throw ConvergenceError("multiplier search diverged");
      c_lo = eval(lo);
    } while (c_lo <= kappa);
  }
  info->s_lo = lo;
  info->s_hi = hi;
  const double slack = 1e-12 * (1.0 + kappa);

  double best_s = std::abs(c_lo - kappa) < std::abs(c_hi - kappa) ? lo : hi;
  double best_gap = std::min(std::abs(c_lo - kappa), std::abs(c_hi - kappa));
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    const double c_mid = eval(mid);
    if (c_mid > c_lo + slack || c_mid < c_hi - slack) {
      ++info->monotonicity_violations;
      break;
    }
    if (std::abs(c_mid - kappa) < best_gap) {
      best_gap = std::abs(c_mid - kappa);
      best_s = mid;
    }
    if (Within(c_mid, kappa)) return mid;
    if (c_mid > kappa) {
      lo = mid;
      c_lo = c_mid;
    } else {
      hi = mid;
      c_hi = c_mid;
    }
  }
  if (info->monotonicity_violations == 0) return best_s;

  // Golden-section minimization of the dual over the original bracket.
  info->method = "golden_section_dual";
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(info->s_lo);
  double b = std::log(info->s_hi);
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = dual(std::exp(x1));
  double f2 = dual(std::exp(x2));
  info->evaluations += 2;
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = dual(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = dual(std::exp(x2));
    }
    ++info->evaluations;
  }
  return std::exp(0.5 * (a + b));
}

Regime Classify(const MatrixXd& C, const MatrixXd& gain, const MatrixXd& KZ) {
  if (IsZero(KZ)) return Regime::kZeroRate;
  if (IsZero(gain)) return Regime::kStableNoFeedback;
  return SpectralRadius(C).stable ? Regime::kStateCostFeedback
                                  : Regime::kUnstableStabilized;
}

}  // namespace

const char* ToString(Regime regime) {
  switch (regime) {
    case Regime::kStableNoFeedback:
      return "stable_no_feedback";
    case Regime::kUnstableStabilized:
      return "unstable_stabilized";
    case Regime::kStateCostFeedback:
      return "state_cost_feedback";
    case Regime::kZeroRate:
      return "zero_rate";
  }
  return "zero_rate";
}

ForwardPass EvaluateStrategy(const ChannelModel& model,
                             const Strategy& strategy) {
  ForwardPass out;
  const int steps = model.steps();
  out.KB_seq.reserve(steps + 1);
  out.KB_seq.push_back(model.InitialSecondMoment());
  out.step_rates.reserve(steps);
  out.step_costs.reserve(steps);
  for (int i = 0; i < steps; ++i) {
    const MatrixXd& Kprev = out.KB_seq.back();
    const MatrixXd& gain = strategy.Gain(i);
    const MatrixXd& KZ = strategy.Innovation(i);
    const MatrixXd& D = model.D(i);
    const MatrixXd& R = model.R(i);
    const double cost = (R * (gain * Kprev * gain.transpose() + KZ)).trace() +
                        (model.Q(i) * Kprev).trace();
    out.step_costs.push_back(cost);
    out.step_rates.push_back(HalfLogDetRatio(D, KZ, model.KVForInversion(i)));
    out.KB_seq.push_back(LyapunovStep(Kprev, model.C(i) + D * gain,
                                      D * KZ * D.transpose() + model.KV(i)));
  }
  double total_cost = 0.0;
  for (double c : out.step_costs) total_cost += c;
  for (double r : out.step_rates) out.information_nats += r;
  out.achieved_cost = total_cost / steps;
  return out;
}

FiniteHorizonSolution FiniteHorizonDp(const ChannelModel& model, double s) {
  EnsureValid(model);
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw PreconditionError("Lagrange multiplier s must be positive and "
                            "finite");
  }
  const int n = model.horizon;
  const int p = model.output_dim;
  const int q = model.input_dim;

  FiniteHorizonSolution sol;
  sol.s = s;
  sol.P_seq.assign(n + 1, MatrixXd());
  sol.r_seq.assign(n + 1, 0.0);
  sol.strategy.gains.assign(n + 1, MatrixXd::Zero(q, p));
  sol.strategy.innovations.assign(n + 1, MatrixXd::Zero(q, q));

  sol.P_seq[n] = s * model.Q(n);
  {
    const waterfill::Result wf = waterfill::Solve(
        {model.D(n), model.KVForInversion(n), s * model.R(n)});
    sol.strategy.innovations[n] = wf.KZ;
    sol.r_seq[n] = wf.value + s * (n + 1) * model.kappa;
  }
  for (int i = n - 1; i >= 0; --i) {
    const MatrixXd& Pnext = sol.P_seq[i + 1];
    const RiccatiStep step = RiccatiBackwardStep(
        Pnext, model.C(i), model.D(i), model.Q(i), model.R(i), s);
    sol.P_seq[i] = step.P;
    sol.strategy.gains[i] = OptimalGain(step.blocks);
    const waterfill::Result wf = waterfill::Solve(
        {model.D(i), model.KVForInversion(i), step.blocks.H22});
    sol.strategy.innovations[i] = wf.KZ;
    sol.r_seq[i] = sol.r_seq[i + 1] + wf.value - (Pnext * model.KV(i)).trace();
  }

  ForwardPass fwd = EvaluateStrategy(model, sol.strategy);
  sol.KB_seq = std::move(fwd.KB_seq);
  sol.step_rates = std::move(fwd.step_rates);
  sol.step_costs = std::move(fwd.step_costs);
  sol.achieved_cost = fwd.achieved_cost;
  sol.information_nats = fwd.information_nats;
  sol.value_nats =
      -(sol.P_seq[0] * model.InitialSecondMoment()).trace() + sol.r_seq[0];
  return sol;
}

FtfiResult FtfiCapacity(const ChannelModel& model) {
  EnsureValid(model);
  const double kappa = model.kappa;
  const int steps = model.steps();
  FtfiResult out;

  // The gains do not depend on s (the recursion is homogeneous in (P, s)),
  // so the K_Z = 0 cost at s = 1 is the infimum of the achievable cost.
  FiniteHorizonSolution unit = FiniteHorizonDp(model, 1.0);
  Strategy silent = unit.strategy;
  for (auto& kz : silent.innovations) kz.setZero();
  out.minimum_cost = EvaluateStrategy(model, silent).achieved_cost;

  const double slack = 1e-12 * (1.0 + out.minimum_cost);
  if (kappa < out.minimum_cost - slack) {
    throw InfeasibleError(
        "infeasible power budget: kappa below the minimum achievable cost " +
            std::to_string(out.minimum_cost),
        out.minimum_cost);
  }
  if (kappa <= out.minimum_cost + slack) {
    double s = 1.0;
    for (int i = 0; i < 2000; ++i) {
      FiniteHorizonSolution sol = FiniteHorizonDp(model, s);
      bool silent_now = true;
      for (const auto& kz : sol.strategy.innovations) {
        silent_now = silent_now && IsZero(kz);
      }
      ++out.search.evaluations;
      if (silent_now) {
        out.solution = std::move(sol);
        out.s_star = s;
        out.capacity_nats = out.solution.information_nats / steps;
        out.search.method = "zero_power";
        return out;
      }
      s *= 2.0;
    }
    throw ConvergenceError("could not find a multiplier silencing K_Z");
  }

  auto cost = [&](double s) { return FiniteHorizonDp(model, s).achieved_cost; };
  auto dual = [&](double s) { return FiniteHorizonDp(model, s).value_nats; };
  out.s_star = SearchMultiplier(kappa, cost, dual, &out.search);
  out.solution = FiniteHorizonDp(model, out.s_star);
  out.capacity_nats = out.solution.information_nats / steps;
  return out;
}

StationarySolution StationarySolve(const ChannelModel& model, double s) {
  EnsureValid(model);
  RequireTimeInvariant(model);
  const MatrixXd& C = model.C(0);
  const MatrixXd& D = model.D(0);
  const MatrixXd& R = model.R(0);
  const MatrixXd& Q = model.StationaryQ();
  const MatrixXd& KV = model.KV(0);
  const MatrixXd KVinv = model.KVForInversion(0);

  StationarySolution sol;
  sol.s = s;
  sol.are = SolveAre(C, D, Q, R, s);
  sol.P = sol.are.P;
  sol.gain = sol.are.gain;
  const waterfill::Result wf = waterfill::Solve(
      {D, KVinv, Symmetrize(s * R + D.transpose() * sol.P * D)});
  sol.KZ = wf.KZ;
  sol.waterfill_projected_gradient = wf.projected_gradient_norm;
  const MatrixXd W = Symmetrize(D * sol.KZ * D.transpose() + KV);
  try {
    sol.KB = SolveLyapunov(sol.are.closed_loop, W);
  } catch (const PreconditionError& e) {
    throw Error(std::string("internal error: stabilizing gain failed the "
                            "Lyapunov solve: ") +
                e.what());
  }
  sol.lyapunov_residual = LyapunovResidual(sol.KB, sol.are.closed_loop, W);
  sol.achieved_cost =
      (R * (sol.gain * sol.KB * sol.gain.transpose() + sol.KZ)).trace() +
      (Q * sol.KB).trace();
  sol.rate_nats = HalfLogDetRatio(D, sol.KZ, KVinv);
  sol.dual_value = wf.value + s * model.kappa - (sol.P * KV).trace();
  sol.regime = Classify(C, sol.gain, sol.KZ);
  return sol;
}

double KappaMin(const ChannelModel& model) {
  EnsureValid(model);
  RequireTimeInvariant(model);
  const MatrixXd& R = model.R(0);
  const AreSolution are =
      SolveAre(model.C(0), model.D(0), model.StationaryQ(), R, 1.0);
  const MatrixXd K0 = SolveLyapunov(are.closed_loop, model.KV(0));
  return (R * are.gain * K0 * are.gain.transpose()).trace() +
         (model.StationaryQ() * K0).trace();
}

FeedbackCapacityResult FeedbackCapacity(const ChannelModel& model) {
  EnsureValid(model);
  RequireTimeInvariant(model);
  const double kappa = model.kappa;
  FeedbackCapacityResult out;
  out.kappa_min = KappaMin(model);
  out.kappa_min_extended = model.output_dim > 1 || model.input_dim > 1;

  const double slack = 1e-12 * (1.0 + out.kappa_min);
  if (kappa <= out.kappa_min + slack) {
    out.below_kappa_min = kappa < out.kappa_min - slack;
    // Smallest s with K_Z* = 0; P scales linearly in s.
    const StationarySolution unit = StationarySolve(model, 1.0);
    const MatrixXd& D = model.D(0);
    const double threshold = ZeroInnovationThreshold(
        D, model.KVForInversion(0),
        Symmetrize(model.R(0) + D.transpose() * unit.P * D));
    out.s_star = threshold > 0.0 ? threshold * (1.0 + 1e-9) : 1.0;
    out.solution = StationarySolve(model, out.s_star);
    out.capacity_nats = 0.0;
    out.search.method = "zero_rate_threshold";
    out.search.evaluations = 2;
  } else {
    auto cost = [&](double s) {
      return StationarySolve(model, s).achieved_cost;
    };
    auto dual = [&](double s) { return StationarySolve(model, s).dual_value; };
    out.s_star = SearchMultiplier(kappa, cost, dual, &out.search);
    out.solution = StationarySolve(model, out.s_star);
    out.capacity_nats = out.solution.rate_nats;
  }
  if (out.below_kappa_min) {
    out.notes.push_back(
        "kappa is below the minimum stabilization cost kappa_min; the "
        "channel cannot be stabilized within budget and the rate is zero");
  }

  if (IsScalar(model)) {
    const ScalarChannel sc = ScalarView(model);
    if (std::abs(sc.C) > 1.0 + tol::kSpectral && sc.Q == 0.0) {
      LowerBoundCheck check;
      check.bound_nats = std::log(std::abs(sc.C));
      check.threshold_kappa =
          (std::pow(sc.C, 4) - 1.0) * sc.KV * sc.R / (sc.D * sc.D);
      check.applicable = kappa >= check.threshold_kappa;
      check.holds = out.capacity_nats >= check.bound_nats - 1e-9;
      out.lower_bound = check;
      out.notes.push_back(kLowerBoundNote);
    }
  }
  return out;
}

ScalarCapacity ScalarFeedbackCapacity(double C, double D, double KV,
                                      double kappa, double R) {
  if (D == 0.0) throw PreconditionError("scalar closed form needs D != 0");
  if (!(KV > 0.0)) throw PreconditionError("noise variance must be positive");
  if (!(R > 0.0)) throw PreconditionError("input weight must be positive");
  if (kappa < 0.0) throw PreconditionError("kappa must be nonnegative");
  if (std::abs(std::abs(C) - 1.0) <= tol::kSpectral) {
    throw PreconditionError(
        "boundary indeterminacy: |C| = 1 is neither stable nor unstable");
  }
  // Work with A' = sqrt(R) A, D' = D / sqrt(R), unit input weight.
  const double root_r = std::sqrt(R);
  const double d = D / root_r;
  const double d2 = d * d;
  ScalarCapacity out;
  if (std::abs(C) < 1.0) {
    out.kappa_min = 0.0;
    out.gain = 0.0;
    out.kz = kappa / R;
    out.capacity_nats = 0.5 * std::log((d2 * kappa + KV) / KV);
    out.s_star = 0.5 * d2 / (d2 * kappa + KV);
    out.regime = kappa > 0.0 ? Regime::kStableNoFeedback : Regime::kZeroRate;
    return out;
  }
  const double C2 = C * C;
  out.kappa_min = (C2 - 1.0) * KV / d2;
  out.gain = -(C2 - 1.0) / (C * d) / root_r;
  if (kappa <= out.kappa_min) {
    out.kz = 0.0;
    out.capacity_nats = 0.0;
    out.s_star = 0.5 * d2 / (C2 * KV);
    out.regime = Regime::kZeroRate;
    return out;
  }
  const double kz_unit = (d2 * kappa + KV * (1.0 - C2)) / (C2 * d2);
  out.kz = kz_unit / R;
  out.capacity_nats = 0.5 * std::log((d2 * kz_unit + KV) / KV);
  out.s_star = 0.5 * d2 / (d2 * kappa + KV);
  out.regime = Regime::kUnstableStabilized;
  return out;
}

double NofeedbackCapacityQ0(const ChannelModel& model) {
  EnsureValid(model);
  RequireTimeInvariant(model);
  if (!IsZero(model.StationaryQ())) {
    throw PreconditionError(
        "no-feedback comparator is only defined for Q = 0");
  }
  if (!SpectralRadius(model.C(0)).stable) return 0.0;
  const double kappa = model.kappa;
  if (kappa == 0.0) return 0.0;
  const MatrixXd& D = model.D(0);
  const MatrixXd& R = model.R(0);
  const MatrixXd KVinv = model.KVForInversion(0);

  auto solve = [&](double mu) {
    return waterfill::Solve({D, KVinv, mu * R});
  };
  auto cost = [&](double mu) { return (R * solve(mu).KZ).trace(); };
  auto dual = [&](double mu) { return solve(mu).value + mu * kappa; };
  MultiplierSearch info;
  const double mu = SearchMultiplier(kappa, cost, dual, &info);
  return HalfLogDetRatio(D, solve(mu).KZ, KVinv);
}

}  // namespace dirinfo
