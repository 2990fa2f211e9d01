#include "dirinfo/model.h"

#include <cmath>
#include <sstream>

#include "dirinfo/errors.h"
#include "dirinfo/tolerances.h"

namespace dirinfo {
namespace {

std::string Shape(const MatrixXd& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

class IssueCollector {
 public:
  void Add(std::string code, std::string message, int index = -1) {
    issues_.push_back({std::move(code), std::move(message), index});
  }
  void Shape(const std::string& name, const MatrixXd& m, int rows, int cols,
             int index) {
    if (m.rows() != rows || m.cols() != cols) {
      Add("dimension_mismatch",
          "dimension mismatch: " + name + " is " + dirinfo::Shape(m) +
              ", expected " + std::to_string(rows) + "x" +
              std::to_string(cols),
          index);
    }
  }
  bool Finite(const std::string& name, const MatrixXd& m, int index) {
    if (!m.allFinite()) {
      Add("not_finite", name + " has non-finite entries", index);
      return false;
    }
    return true;
  }
  std::vector<ModelIssue> Take() { return std::move(issues_); }
  bool empty() const { return issues_.empty(); }

 private:
  std::vector<ModelIssue> issues_;
};

void CheckPd(IssueCollector& out, const std::string& name,
             const std::string& code, const std::string& what,
             const MatrixXd& m, int index) {
  if (!IsSymmetric(m)) {
    out.Add("not_symmetric", name + " is not symmetric", index);
  } else if (!IsPositiveDefinite(m)) {
    out.Add(code, what + " not positive definite", index);
  }
}

void CheckPsd(IssueCollector& out, const std::string& name, const MatrixXd& m,
              int index) {
  if (!IsSymmetric(m)) {
    out.Add("not_symmetric", name + " is not symmetric", index);
  } else if (!IsPsd(m, tol::kPsd)) {
    out.Add("not_psd", name + " not positive semidefinite", index);
  }
}

// Top-left base block PD, remaining block exactly zero.
void CheckAugmentedNoise(IssueCollector& out, const MatrixXd& kv, int base,
                         int index) {
  if (!IsSymmetric(kv)) {
    out.Add("not_symmetric", "K_V is not symmetric", index);
    return;
  }
  if (!IsPositiveDefinite(kv.topLeftCorner(base, base))) {
    out.Add("noise_not_pd", "noise covariance not positive definite", index);
  }
  const int rest = static_cast<int>(kv.rows()) - base;
  if (rest > 0 && (kv.bottomRows(rest).cwiseAbs().maxCoeff() != 0.0)) {
    out.Add("noise_structure",
            "augmented noise covariance must vanish outside the driven block",
            index);
  }
}

}  // namespace

MatrixXd ChannelModel::KVForInversion(int i) const {
  MatrixXd kv = KV(i);
  if (augmentation && augmentation->base_output_dim < kv.rows()) {
    const int base = augmentation->base_output_dim;
    const int rest = static_cast<int>(kv.rows()) - base;
    kv.bottomRightCorner(rest, rest).diagonal().array() +=
        augmentation->regularization;
  }
  return kv;
}

VectorXd ChannelModel::InitialMean() const {
  if (const auto* fixed = std::get_if<VectorXd>(&initial_output)) {
    return fixed->size() == 0 ? VectorXd::Zero(output_dim) : *fixed;
  }
  return std::get<GaussianInitialOutput>(initial_output).mean;
}

MatrixXd ChannelModel::InitialSecondMoment() const {
  const VectorXd mean = InitialMean();
  MatrixXd m = mean * mean.transpose();
  if (const auto* g = std::get_if<GaussianInitialOutput>(&initial_output)) {
    m += g->covariance;
  }
  return m;
}

ChannelModel MakeTimeInvariantModel(const MatrixXd& C, const MatrixXd& D,
                                    const MatrixXd& KV, const MatrixXd& R,
                                    const MatrixXd& Q, double kappa,
                                    int horizon,
                                    std::optional<MatrixXd> terminal_Q) {
  ChannelModel m;
  m.horizon = horizon;
  m.output_dim = static_cast<int>(C.rows());
  m.input_dim = static_cast<int>(D.cols());
  m.C_seq = {C};
  m.D_seq = {D};
  m.KV_seq = {KV};
  m.R_seq = {R};
  m.Q_seq = {Q};
  m.terminal_Q = terminal_Q ? *terminal_Q : Q;
  m.kappa = kappa;
  m.initial_output = VectorXd::Zero(m.output_dim);
  m.time_invariant = true;
  return m;
}

ChannelModel MakeScalarModel(double C, double D, double KV, double R, double Q,
                             double kappa, int horizon,
                             std::optional<double> terminal_Q) {
  auto s = [](double v) { return MatrixXd::Constant(1, 1, v); };
  return MakeTimeInvariantModel(
      s(C), s(D), s(KV), s(R), s(Q), kappa, horizon,
      terminal_Q ? std::optional<MatrixXd>(s(*terminal_Q)) : std::nullopt);
}

std::vector<ModelIssue> ValidateModel(const ChannelModel& model) {
  IssueCollector out;
  const int p = model.output_dim;
  const int q = model.input_dim;
  if (model.horizon < 0) out.Add("bad_horizon", "horizon must be >= 0");
  if (p <= 0 || q <= 0) {
    out.Add("dimension_mismatch", "dimension mismatch: p and q must be >= 1");
    return out.Take();
  }
  if (!std::isfinite(model.kappa) || model.kappa < 0.0) {
    out.Add("negative_kappa", "power budget kappa must be finite and >= 0");
  }

  const size_t expected =
      model.time_invariant ? 1 : static_cast<size_t>(model.horizon) + 1;
  const std::pair<const char*, const std::vector<MatrixXd>*> seqs[] = {
      {"C", &model.C_seq},   {"D", &model.D_seq}, {"K_V", &model.KV_seq},
      {"R", &model.R_seq},   {"Q", &model.Q_seq}};
  bool lengths_ok = true;
  for (const auto& [name, seq] : seqs) {
    if (seq->size() != expected) {
      out.Add("sequence_length",
              std::string("sequence ") + name + " has length " +
                  std::to_string(seq->size()) + ", expected " +
                  std::to_string(expected));
      lengths_ok = false;
    }
  }
  if (!lengths_ok) return out.Take();

  for (size_t i = 0; i < expected; ++i) {
    const int idx = static_cast<int>(i);
    const MatrixXd& C = model.C_seq[i];
    const MatrixXd& D = model.D_seq[i];
    const MatrixXd& KV = model.KV_seq[i];
    const MatrixXd& R = model.R_seq[i];
    const MatrixXd& Q = model.Q_seq[i];
    IssueCollector shapes;
    shapes.Shape("C", C, p, p, idx);
    shapes.Shape("D", D, p, q, idx);
    shapes.Shape("K_V", KV, p, p, idx);
    shapes.Shape("R", R, q, q, idx);
    shapes.Shape("Q", Q, p, p, idx);
    const bool shapes_ok = shapes.empty();
    for (auto& issue : shapes.Take()) out.Add(issue.code, issue.message, idx);
    if (!shapes_ok) continue;
    bool finite = out.Finite("C", C, idx) & out.Finite("D", D, idx) &
                  out.Finite("K_V", KV, idx) & out.Finite("R", R, idx) &
                  out.Finite("Q", Q, idx);
    if (!finite) continue;
    if (model.augmentation) {
      CheckAugmentedNoise(out, KV, model.augmentation->base_output_dim, idx);
    } else {
      CheckPd(out, "K_V", "noise_not_pd", "noise covariance", KV, idx);
    }
    CheckPd(out, "R", "weight_not_pd", "input cost weight R", R, idx);
    CheckPsd(out, "Q", Q, idx);
  }

  IssueCollector term;
  term.Shape("terminal_Q", model.terminal_Q, p, p, model.horizon);
  if (term.empty()) {
    if (out.Finite("terminal_Q", model.terminal_Q, model.horizon)) {
      CheckPsd(out, "terminal_Q", model.terminal_Q, model.horizon);
    }
  } else {
    for (auto& issue : term.Take()) out.Add(issue.code, issue.message, -1);
  }

  if (const auto* fixed = std::get_if<VectorXd>(&model.initial_output)) {
    if (fixed->size() != 0 && fixed->size() != p) {
      out.Add("dimension_mismatch",
              "dimension mismatch: initial output has length " +
                  std::to_string(fixed->size()));
    }
  } else {
    const auto& g = std::get<GaussianInitialOutput>(model.initial_output);
    if (g.mean.size() != p || g.covariance.rows() != p ||
        g.covariance.cols() != p) {
      out.Add("dimension_mismatch",
              "dimension mismatch: initial output law has wrong shape");
    } else if (!IsSymmetric(g.covariance) ||
               !IsPsd(g.covariance, tol::kPsd)) {
      out.Add("initial_not_psd",
              "initial output covariance not positive semidefinite");
    }
  }
  return out.Take();
}

const ChannelModel& EnsureValid(const ChannelModel& model) {
  const auto issues = ValidateModel(model);
  if (issues.empty()) return model;
  std::ostringstream os;
  bool dims = false;
  for (size_t i = 0; i < issues.size(); ++i) {
    if (i) os << "; ";
    os << issues[i].message;
    if (issues[i].index >= 0) os << " (index " << issues[i].index << ")";
    dims = dims || issues[i].code == "dimension_mismatch";
  }
  if (dims) throw DimensionError(os.str());
  throw PreconditionError(os.str());
}

std::vector<ModelIssue> ValidateMemoryModel(const MemoryJModel& model) {
  IssueCollector out;
  const int p = model.output_dim;
  const int q = model.input_dim;
  if (p <= 0 || q <= 0) {
    out.Add("dimension_mismatch", "dimension mismatch: p and q must be >= 1");
    return out.Take();
  }
  if (model.horizon < 0) out.Add("bad_horizon", "horizon must be >= 0");
  if (model.channel_memory() < 1) {
    out.Add("bad_memory", "channel memory M must be >= 1");
  }
  if (model.cost_memory < 0) {
    out.Add("bad_memory", "cost memory K must be >= 0");
    return out.Take();
  }
  if (!std::isfinite(model.kappa) || model.kappa < 0.0) {
    out.Add("negative_kappa", "power budget kappa must be finite and >= 0");
  }
  for (int j = 0; j < model.channel_memory(); ++j) {
    out.Shape("C_" + std::to_string(j + 1), model.C_lags[j], p, p, j);
  }
  out.Shape("D", model.D, p, q, -1);
  out.Shape("K_V", model.KV, p, p, -1);
  out.Shape("R", model.R, q, q, -1);
  const int kp = model.cost_memory * p;
  out.Shape("Q_K", model.Q_K, kp, kp, -1);
  if (model.terminal_Q_K) {
    out.Shape("terminal_Q_K", *model.terminal_Q_K, kp, kp, -1);
  }
  if (model.initial_outputs.size() > model.order() * p) {
    out.Add("dimension_mismatch",
            "dimension mismatch: too many initial outputs");
  }
  if (!out.empty()) return out.Take();
  CheckPd(out, "K_V", "noise_not_pd", "noise covariance", model.KV, -1);
  CheckPd(out, "R", "weight_not_pd", "input cost weight R", model.R, -1);
  if (kp > 0) CheckPsd(out, "Q_K", model.Q_K, -1);
  if (kp > 0 && model.terminal_Q_K) {
    CheckPsd(out, "terminal_Q_K", *model.terminal_Q_K, -1);
  }
  return out.Take();
}

ChannelModel AugmentMemory(const MemoryJModel& model) {
  const auto issues = ValidateMemoryModel(model);
  if (!issues.empty()) {
    std::string msg;
    for (const auto& issue : issues) {
      if (!msg.empty()) msg += "; ";
      msg += issue.message;
    }
    throw PreconditionError(msg);
  }
  const int p = model.output_dim;
  const int q = model.input_dim;
  const int M = model.channel_memory();
  const int K = model.cost_memory;
  const int J = model.order();
  const int n = J * p;
  const int kp = K * p;

  MatrixXd C = MatrixXd::Zero(n, n);
  for (int j = 0; j < M; ++j) C.block(0, j * p, p, p) = model.C_lags[j];
  for (int k = 1; k < J; ++k) {
    C.block(k * p, (k - 1) * p, p, p) = MatrixXd::Identity(p, p);
  }
  MatrixXd D = MatrixXd::Zero(n, q);
  D.topRows(p) = model.D;
  MatrixXd KV = MatrixXd::Zero(n, n);
  KV.topLeftCorner(p, p) = model.KV;
  MatrixXd Q = MatrixXd::Zero(n, n);
  if (kp > 0) Q.topLeftCorner(kp, kp) = model.Q_K;
  MatrixXd terminal = Q;
  if (kp > 0 && model.terminal_Q_K) {
    terminal.topLeftCorner(kp, kp) = *model.terminal_Q_K;
  }

  ChannelModel out =
      MakeTimeInvariantModel(C, D, KV, model.R, Q, model.kappa, model.horizon,
                             terminal);
  VectorXd init = VectorXd::Zero(n);
  init.head(model.initial_outputs.size()) = model.initial_outputs;
  out.initial_output = init;
  if (J > 1) {
    out.augmentation = AugmentationInfo{M, K, J, p,
                                        tol::kAugmentRegularization};
  }
  return out;
}

bool IsScalar(const ChannelModel& model) {
  return model.output_dim == 1 && model.input_dim == 1 &&
         !model.augmentation;
}

ScalarChannel ScalarView(const ChannelModel& model) {
  if (!IsScalar(model)) {
    throw PreconditionError("model is not scalar (p = q = 1 required)");
  }
  if (!model.time_invariant) {
    throw PreconditionError("model is not time-invariant");
  }
  return ScalarChannel{model.C_seq[0](0, 0), model.D_seq[0](0, 0),
                       model.KV_seq[0](0, 0), model.R_seq[0](0, 0),
                       model.Q_seq[0](0, 0), model.kappa};
}

std::vector<ModelIssue> ValidateStrategy(const Strategy& strategy,
                                         const ChannelModel& model) {
  IssueCollector out;
  const size_t n = strategy.gains.size();
  if (n == 0 || strategy.innovations.size() != n) {
    out.Add("sequence_length", "strategy gains and innovations must have "
                               "equal nonzero length");
    return out.Take();
  }
  if (n != 1 && n != static_cast<size_t>(model.steps())) {
    out.Add("sequence_length", "strategy length must be 1 or horizon + 1");
  }
  for (size_t i = 0; i < n; ++i) {
    const int idx = static_cast<int>(i);
    out.Shape("gain", strategy.gains[i], model.input_dim, model.output_dim,
              idx);
    out.Shape("K_Z", strategy.innovations[i], model.input_dim,
              model.input_dim, idx);
    if (strategy.innovations[i].rows() == model.input_dim &&
        strategy.innovations[i].cols() == model.input_dim) {
      CheckPsd(out, "K_Z", strategy.innovations[i], idx);
    }
  }
  return out.Take();
}

}  // namespace dirinfo
