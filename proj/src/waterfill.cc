#include "dirinfo/waterfill.h"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <vector>

#include "dirinfo/errors.h"
#include "dirinfo/tolerances.h"

namespace dirinfo::waterfill {
namespace {

// Iterates also have to stop moving: a small gradient alone leaves K_Z loose
// where the objective is flat (large K_Z).
constexpr double kStepTolerance = 1e-12;

void CheckShapes(const Problem& pr) {
  const auto p = pr.D.rows();
  const auto q = pr.D.cols();
  if (pr.KV.rows() != p || pr.KV.cols() != p || pr.weight.rows() != q ||
      pr.weight.cols() != q) {
    throw DimensionError("dimension mismatch in water-filling problem");
  }
}

// Objective and the factorization of D K D^T + K_V, reused by the gradient.
struct Evaluation {
  double value = 0.0;
  MatrixXd gradient;
};

class Evaluator {
 public:
  explicit Evaluator(const Problem& pr)
      : pr_(pr), logdet_kv_(LogDetSpd(pr.KV)) {
    if (std::isnan(logdet_kv_)) {
      throw PreconditionError("noise covariance not positive definite");
    }
  }

  // Returns false if the output covariance is not PD.
  bool Value(const MatrixXd& KZ, double* value) const {
    const MatrixXd S = Symmetrize(pr_.D * KZ * pr_.D.transpose() + pr_.KV);
    const double logdet = LogDetSpd(S);
    if (std::isnan(logdet)) return false;
    *value = 0.5 * (logdet - logdet_kv_) - (pr_.weight * KZ).trace();
    return true;
  }

  MatrixXd Grad(const MatrixXd& KZ) const {
    const MatrixXd S = Symmetrize(pr_.D * KZ * pr_.D.transpose() + pr_.KV);
    Eigen::LLT<MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
      throw PreconditionError("D K_Z D^T + K_V is not positive definite");
    }
    return Symmetrize(0.5 * pr_.D.transpose() * llt.solve(pr_.D) -
                      pr_.weight);
  }

 private:
  const Problem& pr_;
  double logdet_kv_;
};

void CheckBounded(const Problem& pr) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Symmetrize(pr.weight));
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -tol::kPsd * scale) {
    throw PreconditionError("water-filling weight not positive semidefinite");
  }
  const double dscale = std::max(1.0, pr.D.norm());
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()(k) > tol::kPsd * scale) continue;
    const VectorXd v = es.eigenvectors().col(k);
    if ((pr.D * v).norm() > 1e-12 * dscale) {
      throw UnboundedError(
          "water-filling objective is unbounded: weight vanishes on a "
          "direction the channel transmits");
    }
  }
}

// Closed-form optimum on range(W) via K = T X T^T, T = U_r L_r^{-1/2}.
// Exact when the eigensplit is clean; the ascent loop polishes the rest.
MatrixXd SpectralStart(const Problem& pr) {
  const auto q = pr.D.cols();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Symmetrize(pr.weight));
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()(k) > tol::kPsd * scale) keep.push_back(k);
  }
  MatrixXd T(q, static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) {
    T.col(static_cast<Eigen::Index>(j)) =
        es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()(keep[j]));
  }
  if (T.cols() == 0) return MatrixXd::Zero(q, q);
  const Eigen::LLT<MatrixXd> llt(Symmetrize(pr.KV));
  const MatrixXd M = llt.matrixL().solve(pr.D * T);
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  VectorXd x = VectorXd::Zero(T.cols());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 0.0) x(i) = std::max(0.0, 0.5 - 1.0 / (sv(i) * sv(i)));
  }
  const MatrixXd V = svd.matrixV();
  const MatrixXd X = V * x.asDiagonal() * V.transpose();
  return Symmetrize(T * X * T.transpose());
}

}  // namespace

double Objective(const Problem& problem, const Eigen::Ref<const MatrixXd>& KZ) {
  CheckShapes(problem);
  double value = 0.0;
  if (!Evaluator(problem).Value(KZ, &value)) {
    throw PreconditionError("D K_Z D^T + K_V is not positive definite");
  }
  return value;
}

MatrixXd Gradient(const Problem& problem,
                  const Eigen::Ref<const MatrixXd>& KZ) {
  CheckShapes(problem);
  return Evaluator(problem).Grad(KZ);
}

Result Solve(const Problem& problem, const Options& options) {
  CheckShapes(problem);
  CheckBounded(problem);
  const Evaluator eval(problem);
  const auto q = problem.D.cols();

  const double wnorm = problem.weight.operatorNorm();
  if (wnorm == 0.0) {
    // Bounded with W = 0 means D = 0: every K_Z is optimal.
    return Result{MatrixXd::Zero(q, q), 0.0, 0, 0.0, 0.0};
  }

  MatrixXd K = SpectralStart(problem);
  double f = 0.0;
  eval.Value(K, &f);
  MatrixXd g = eval.Grad(K);
  double step = 1.0 / wnorm;

  Result out;
  for (int it = 0; it < options.max_iter; ++it) {
    const MatrixXd pg = ProjectPsd(K + g) - K;
    const double pg_norm = pg.norm();
    const double comp = std::abs((K * g).trace());
    out.iterations = it;
    out.projected_gradient_norm = pg_norm;
    out.complementarity = comp;

    // Backtracking on the projected arc from the current trial step.
    MatrixXd K_next;
    double f_next = 0.0;
    for (int bt = 0;; ++bt) {
      K_next = ProjectPsd(K + step * g);
      const MatrixXd d = K_next - K;
      const bool ok = eval.Value(K_next, &f_next);
      if (ok && f_next >= f + (g.cwiseProduct(d)).sum() -
                               d.squaredNorm() / (2.0 * step) -
                               1e-15 * (1.0 + std::abs(f))) {
        break;
      }
      step *= 0.5;
      if (bt > 200) {
        K_next = K;
        f_next = f;
        break;
      }
    }
    const MatrixXd dK = K_next - K;
    const double move = dK.norm();
    if (pg_norm <= options.tolerance && comp <= options.tolerance &&
        move <= kStepTolerance * (1.0 + K.norm())) {
      out.KZ = K;
      out.value = f;
      return out;
    }
    const MatrixXd g_next = eval.Grad(K_next);
    // Barzilai-Borwein trial step for the next iteration.
    const MatrixXd dg = g_next - g;
    const double curvature = -(dK.cwiseProduct(dg)).sum();
    if (curvature > 0.0 && move > 0.0) {
      step = dK.squaredNorm() / curvature;
    } else {
      step = std::min(step * 2.0, 1e12);
    }
    K = K_next;
    f = f_next;
    g = g_next;
  }
  throw ConvergenceError("water-filling did not converge within " +
                         std::to_string(options.max_iter) + " iterations");
}

ScalarResult ScalarSolve(double D, double KV, double weight) {
  if (!(KV > 0.0)) {
    throw PreconditionError("noise variance must be positive");
  }
  if (weight < 0.0) {
    throw PreconditionError("water-filling weight must be nonnegative");
  }
  if (D == 0.0) {
    if (weight == 0.0) {
      throw PreconditionError("degenerate scalar water-fill: D = 0 and "
                              "weight = 0");
    }
    return {0.0, 0.0};
  }
  if (weight == 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  const double kz = std::max(0.0, 1.0 / (2.0 * weight) - KV / (D * D));
  const double value = 0.5 * std::log((D * D * kz + KV) / KV) - weight * kz;
  return {kz, value};
}

}  // namespace dirinfo::waterfill
