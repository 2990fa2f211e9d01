#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dirinfo/linalg.h"

namespace dirinfo {

/// Gaussian law of the output preceding the first transmission.
struct GaussianInitialOutput {
  VectorXd mean;
  MatrixXd covariance;
};

/// Either a fixed b_{-1} or a Gaussian law for it.
using InitialOutput = std::variant<VectorXd, GaussianInitialOutput>;

/// Present on models produced by `AugmentMemory`.
struct AugmentationInfo {
  int channel_memory = 1;   // M
  int cost_memory = 1;      // K
  int order = 1;            // J = max(M, K)
  int base_output_dim = 1;  // p of the original channel
  /// Added to the undriven diagonal when the noise covariance is inverted.
  double regularization = 0.0;
};

/// Gaussian linear channel with one step of output memory
///
///   B_i = C_i B_{i-1} + D_i A_i + V_i,   V_i ~ N(0, K_{V_i}),
///
/// with average cost (1/(n+1)) sum_i E[<A_i, R_i A_i> + <B_{i-1}, Q_i B_{i-1}>]
/// bounded by kappa. Step indices run over 0..horizon. The cost weight at the
/// last step is `terminal_Q` and replaces Q_seq[horizon].
///
/// Time-invariant models store a single element per sequence and broadcast it.
struct ChannelModel {
  int horizon = 0;
  int output_dim = 1;
  int input_dim = 1;
  std::vector<MatrixXd> C_seq;
  std::vector<MatrixXd> D_seq;
  std::vector<MatrixXd> KV_seq;
  std::vector<MatrixXd> R_seq;
  std::vector<MatrixXd> Q_seq;
  MatrixXd terminal_Q;
  double kappa = 0.0;
  InitialOutput initial_output = VectorXd();
  bool time_invariant = true;
  std::optional<AugmentationInfo> augmentation;

  int steps() const { return horizon + 1; }

  const MatrixXd& C(int i) const { return At(C_seq, i); }
  const MatrixXd& D(int i) const { return At(D_seq, i); }
  const MatrixXd& KV(int i) const { return At(KV_seq, i); }
  const MatrixXd& R(int i) const { return At(R_seq, i); }
  /// Running cost weight Q_{i,i-1}; `terminal_Q` at i == horizon.
  const MatrixXd& Q(int i) const {
    return i == horizon ? terminal_Q : At(Q_seq, i);
  }
  /// Stationary cost weight (time-invariant models).
  const MatrixXd& StationaryQ() const { return Q_seq.front(); }

  /// K_V with the augmentation regularization applied to the undriven block.
  MatrixXd KVForInversion(int i) const;

  VectorXd InitialMean() const;
  /// E[b_{-1} b_{-1}^T].
  MatrixXd InitialSecondMoment() const;

 private:
  static const MatrixXd& At(const std::vector<MatrixXd>& seq, int i) {
    return seq.size() == 1 ? seq.front() : seq.at(static_cast<size_t>(i));
  }
};

/// Builds a time-invariant model. `terminal_Q` defaults to Q.
ChannelModel MakeTimeInvariantModel(const MatrixXd& C, const MatrixXd& D,
                                    const MatrixXd& KV, const MatrixXd& R,
                                    const MatrixXd& Q, double kappa,
                                    int horizon = 0,
                                    std::optional<MatrixXd> terminal_Q = {});

ChannelModel MakeScalarModel(double C, double D, double KV, double R, double Q,
                             double kappa, int horizon = 0,
                             std::optional<double> terminal_Q = {});

/// Channel whose output depends on the last M outputs and whose cost weighs
/// the last K outputs:
///
///   B_i = sum_{j=1..M} C_j B_{i-j} + D A_i + V_i,
///   cost_i = <A_i, R A_i> + <B_{i-K}^{i-1}, Q_K B_{i-K}^{i-1}>.
///
/// The stacked past outputs are ordered most recent first, i.e.
/// [B_{i-1}; B_{i-2}; ...; B_{i-K}]; Q_K is (K p) x (K p).
struct MemoryJModel {
  int horizon = 0;
  int output_dim = 1;
  int input_dim = 1;
  std::vector<MatrixXd> C_lags;  // C_1 .. C_M
  MatrixXd D;
  MatrixXd KV;
  MatrixXd R;
  int cost_memory = 1;  // K
  MatrixXd Q_K;
  std::optional<MatrixXd> terminal_Q_K;
  double kappa = 0.0;
  /// Past outputs b_{-1}, ..., b_{-J} stacked most recent first; a shorter
  /// vector is zero-padded. Empty means all zero.
  VectorXd initial_outputs;

  int channel_memory() const { return static_cast<int>(C_lags.size()); }
  int order() const { return std::max(channel_memory(), cost_memory); }
};

/// A violated model invariant.
struct ModelIssue {
  std::string code;  // dimension_mismatch, noise_not_pd, ...
  std::string message;
  int index = -1;    // offending sequence index, -1 if not applicable
};

/// Every violated invariant; empty when the model is valid.
std::vector<ModelIssue> ValidateModel(const ChannelModel& model);
std::vector<ModelIssue> ValidateMemoryModel(const MemoryJModel& model);

/// Throws PreconditionError (or DimensionError) listing all issues.
const ChannelModel& EnsureValid(const ChannelModel& model);

/// Lifts a memory-J model to a first-order model on the stacked output
/// [B_i; B_{i-1}; ...; B_{i-J+1}]. M = K = 1 returns the model unchanged.
ChannelModel AugmentMemory(const MemoryJModel& model);

/// The five scalars plus kappa of a 1x1 time-invariant model.
struct ScalarChannel {
  double C = 0.0;
  double D = 1.0;
  double KV = 1.0;
  double R = 1.0;
  double Q = 0.0;
  double kappa = 0.0;
};

/// Throws PreconditionError if the model is not scalar or not time-invariant.
ScalarChannel ScalarView(const ChannelModel& model);

bool IsScalar(const ChannelModel& model);

/// Feedback strategy A_i = Gamma_i B_{i-1} + Z_i, Z_i ~ N(0, K_{Z_i}).
/// A single element broadcasts over all steps.
struct Strategy {
  std::vector<MatrixXd> gains;        // q x p
  std::vector<MatrixXd> innovations;  // q x q PSD

  const MatrixXd& Gain(int i) const { return At(gains, i); }
  const MatrixXd& Innovation(int i) const { return At(innovations, i); }
  bool stationary() const { return gains.size() == 1; }

 private:
  static const MatrixXd& At(const std::vector<MatrixXd>& seq, int i) {
    return seq.size() == 1 ? seq.front() : seq.at(static_cast<size_t>(i));
  }
};

std::vector<ModelIssue> ValidateStrategy(const Strategy& strategy,
                                         const ChannelModel& model);

}  // namespace dirinfo
