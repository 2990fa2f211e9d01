#include "dirinfo/riccati.h"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdio>
#include <limits>

#include "dirinfo/errors.h"
#include "dirinfo/stability.h"
#include "dirinfo/tolerances.h"

namespace dirinfo {
namespace {

void CheckShapes(const Eigen::Ref<const MatrixXd>& P,
                 const Eigen::Ref<const MatrixXd>& C,
                 const Eigen::Ref<const MatrixXd>& D,
                 const Eigen::Ref<const MatrixXd>& Q,
                 const Eigen::Ref<const MatrixXd>& R) {
  const auto p = C.rows();
  const auto q = D.cols();
  if (C.cols() != p || D.rows() != p || Q.rows() != p || Q.cols() != p ||
      R.rows() != q || R.cols() != q || P.rows() != p || P.cols() != p) {
    throw DimensionError("dimension mismatch in Riccati data");
  }
}

// Solves H22 X = rhs; H22 must be symmetric positive definite.
MatrixXd SolveH22(const MatrixXd& H22, const MatrixXd& rhs) {
  Eigen::LLT<MatrixXd> llt(H22);
  if (llt.info() != Eigen::Success) {
    throw PreconditionError("H22 = D^T P D + sR is not positive definite");
  }
  return llt.solve(rhs);
}

RiccatiStepBlocks Blocks(const Eigen::Ref<const MatrixXd>& Pnext,
                         const Eigen::Ref<const MatrixXd>& C,
                         const Eigen::Ref<const MatrixXd>& D,
                         const Eigen::Ref<const MatrixXd>& Q,
                         const Eigen::Ref<const MatrixXd>& R, double s) {
  RiccatiStepBlocks b;
  const MatrixXd PC = Pnext * C;
  b.H11 = Symmetrize(C.transpose() * PC + s * Q);
  b.H12 = PC.transpose() * D;
  b.H22 = Symmetrize(D.transpose() * Pnext * D + s * R);
  return b;
}

struct IterationResult {
  MatrixXd P;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

IterationResult Iterate(MatrixXd P, const Eigen::Ref<const MatrixXd>& C,
                        const Eigen::Ref<const MatrixXd>& D,
                        const Eigen::Ref<const MatrixXd>& Q,
                        const Eigen::Ref<const MatrixXd>& R, double s,
                        const AreOptions& options) {
  IterationResult out;
  for (int k = 0; k < options.max_iter; ++k) {
    MatrixXd next = RiccatiBackwardStep(P, C, D, Q, R, s).P;
    out.residual = (next - P).norm() / (1.0 + next.norm());
    P = std::move(next);
    out.iterations = k + 1;
    if (!P.allFinite()) break;
    if (out.residual <= options.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.P = std::move(P);
  return out;
}

}  // namespace

RiccatiStep RiccatiBackwardStep(const Eigen::Ref<const MatrixXd>& Pnext,
                                const Eigen::Ref<const MatrixXd>& C,
                                const Eigen::Ref<const MatrixXd>& D,
                                const Eigen::Ref<const MatrixXd>& Q,
                                const Eigen::Ref<const MatrixXd>& R,
                                double s) {
  CheckShapes(Pnext, C, D, Q, R);
  if (!(s > 0.0)) {
    throw PreconditionError("Lagrange multiplier s must be positive");
  }
  RiccatiStep step;
  step.blocks = Blocks(Pnext, C, D, Q, R, s);
  const MatrixXd X = SolveH22(step.blocks.H22, step.blocks.H12.transpose());
  step.P = Symmetrize(step.blocks.H11 - step.blocks.H12 * X);
  return step;
}

MatrixXd OptimalGain(const RiccatiStepBlocks& blocks) {
  return -SolveH22(blocks.H22, blocks.H12.transpose());
}

double AreResidual(const Eigen::Ref<const MatrixXd>& P,
                   const Eigen::Ref<const MatrixXd>& C,
                   const Eigen::Ref<const MatrixXd>& D,
                   const Eigen::Ref<const MatrixXd>& Q,
                   const Eigen::Ref<const MatrixXd>& R, double s) {
  const MatrixXd next = RiccatiBackwardStep(P, C, D, Q, R, s).P;
  return (P - next).norm() / (1.0 + P.norm());
}

MatrixXd CostFactor(const Eigen::Ref<const MatrixXd>& Q) {
  return SymmetricSqrt(Q);
}

AreSolution SolveAre(const Eigen::Ref<const MatrixXd>& C,
                     const Eigen::Ref<const MatrixXd>& D,
                     const Eigen::Ref<const MatrixXd>& Q,
                     const Eigen::Ref<const MatrixXd>& R, double s,
                     const AreOptions& options) {
  CheckShapes(Q, C, D, Q, R);
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw PreconditionError("Lagrange multiplier s must be positive and "
                            "finite");
  }
  if (!IsStabilizable(C, D)) {
    throw PreconditionError("stabilizability test failed for (C,D)");
  }
  const bool detectable = IsDetectable(CostFactor(Q), C);
  const auto p = C.rows();

  IterationResult it;
  if (detectable) {
    it = Iterate(s * Q, C, D, Q, R, s, options);
  } else {
    it = Iterate(MatrixXd::Identity(p, p), C, D, Q, R, s, options);
  }
  if (!it.converged) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", it.residual);
    throw ConvergenceError("Riccati iteration did not converge within " +
                           std::to_string(options.max_iter) +
                           " iterations (residual " + buf +
                           "); a mode on the unit circle has no "
                           "stabilizing solution");
  }

  AreSolution sol;
  sol.P = it.P;
  sol.iterations = it.iterations;
  sol.degenerate_detectability = !detectable;
  const RiccatiStep step = RiccatiBackwardStep(sol.P, C, D, Q, R, s);
  sol.residual = (sol.P - step.P).norm() / (1.0 + sol.P.norm());
  sol.gain = OptimalGain(step.blocks);
  sol.closed_loop = C + D * sol.gain;
  sol.stabilizing = SpectralRadius(sol.closed_loop).stable;
  if (!detectable && !sol.stabilizing) {
    throw PreconditionError(
        "detectability test failed for (G,C) and no stabilizing Riccati "
        "solution was found");
  }
  return sol;
}

const char* ToString(Uniqueness u) {
  switch (u) {
    case Uniqueness::kUnique:
      return "unique";
    case Uniqueness::kConditional:
      return "conditional";
    case Uniqueness::kNone:
      return "none";
  }
  return "none";
}

AreClassification ClassifyAre(const Eigen::Ref<const MatrixXd>& P,
                              const Eigen::Ref<const MatrixXd>& C,
                              const Eigen::Ref<const MatrixXd>& D,
                              const Eigen::Ref<const MatrixXd>& Q,
                              const Eigen::Ref<const MatrixXd>& R, double s,
                              const Eigen::Ref<const MatrixXd>& KV) {
  CheckShapes(P, C, D, Q, R);
  AreClassification out;
  out.min_eigenvalue = MinEigenvalue(P);
  out.psd = IsSymmetric(P) && IsPsd(P, tol::kPsd);
  out.stabilizable = IsStabilizable(C, D);
  out.detectable = IsDetectable(CostFactor(Q), C);
  out.noise_controllable = IsControllable(C, SymmetricSqrt(KV));

  const RiccatiStepBlocks blocks = Blocks(P, C, D, Q, R, s);
  if (IsPositiveDefinite(blocks.H22)) {
    const MatrixXd gain = OptimalGain(blocks);
    const SpectrumReport loop = SpectralRadius(C + D * gain);
    out.closed_loop_radius = loop.spectral_radius;
    out.stabilizing = loop.stable;
    out.residual = AreResidual(P, C, D, Q, R, s);
  } else {
    out.closed_loop_radius = std::numeric_limits<double>::infinity();
    out.residual = std::numeric_limits<double>::infinity();
  }

  // Certificates only apply to actual fixed points.
  const bool fixed_point = out.residual <= 1e-8;
  if (!fixed_point) {
    out.uniqueness = Uniqueness::kNone;
  } else if (out.psd && out.stabilizable && out.detectable) {
    out.uniqueness = Uniqueness::kUnique;
  } else if (out.stabilizing) {
    out.uniqueness = Uniqueness::kConditional;
  }
  return out;
}

}  // namespace dirinfo
