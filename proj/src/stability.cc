#include "dirinfo/stability.h"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>

#include "dirinfo/errors.h"
#include "dirinfo/tolerances.h"

namespace dirinfo {
namespace {

void RequireSquare(const Eigen::Ref<const MatrixXd>& A, const char* name) {
  if (A.rows() != A.cols()) {
    throw DimensionError(std::string("dimension mismatch: ") + name +
                         " must be square");
  }
}

void RequireRows(const Eigen::Ref<const MatrixXd>& A,
                 const Eigen::Ref<const MatrixXd>& B) {
  RequireSquare(A, "A");
  if (B.rows() != A.rows()) {
    throw DimensionError("dimension mismatch: B must have as many rows as A");
  }
}

template <typename Matrix>
int RankOf(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double largest = sv.size() ? sv(0) : 0.0;
  if (largest == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol::kRank * largest) ++rank;
  }
  return rank;
}

}  // namespace

SpectrumReport SpectralRadius(const Eigen::Ref<const MatrixXd>& A) {
  RequireSquare(A, "A");
  SpectrumReport report;
  if (A.size() == 0) return report;
  Eigen::EigenSolver<MatrixXd> es(A, /*computeEigenvectors=*/false);
  const auto& ev = es.eigenvalues();
  report.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  for (const auto& lambda : report.eigenvalues) {
    report.spectral_radius = std::max(report.spectral_radius, std::abs(lambda));
  }
  report.stable = report.spectral_radius < 1.0 - tol::kSpectral;
  return report;
}

int NumericalRank(const Eigen::Ref<const MatrixXd>& m) {
  return RankOf(MatrixXd(m));
}

bool IsControllable(const Eigen::Ref<const MatrixXd>& A,
                    const Eigen::Ref<const MatrixXd>& B) {
  RequireRows(A, B);
  const Eigen::Index n = A.rows();
  const Eigen::Index k = B.cols();
  // [B AB A²B ... Aⁿ⁻¹B]
  MatrixXd ctrb(n, n * k);
  if (k > 0) {
    ctrb.leftCols(k) = B;
    for (Eigen::Index i = 1; i < n; ++i) {
      ctrb.middleCols(i * k, k) = A * ctrb.middleCols((i - 1) * k, k);
    }
  }
  return RankOf(ctrb) == n;
}

bool IsObservable(const Eigen::Ref<const MatrixXd>& C,
                  const Eigen::Ref<const MatrixXd>& A) {
  RequireSquare(A, "A");
  if (C.cols() != A.rows()) {
    throw DimensionError("dimension mismatch: C must have as many columns "
                         "as A has rows");
  }
  return IsControllable(A.transpose(), C.transpose());
}

bool IsStabilizable(const Eigen::Ref<const MatrixXd>& A,
                    const Eigen::Ref<const MatrixXd>& B) {
  RequireRows(A, B);
  const Eigen::Index n = A.rows();
  const SpectrumReport spectrum = SpectralRadius(A);
  for (const auto& lambda : spectrum.eigenvalues) {
    if (std::abs(lambda) < 1.0 - tol::kSpectral) continue;
    Eigen::MatrixXcd pbh(n, n + B.cols());
    pbh.leftCols(n) = A.cast<std::complex<double>>() -
                      lambda * Eigen::MatrixXcd::Identity(n, n);
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    if (RankOf(pbh) < n) return false;
  }
  return true;
}

bool IsDetectable(const Eigen::Ref<const MatrixXd>& G,
                  const Eigen::Ref<const MatrixXd>& A) {
  RequireSquare(A, "A");
  if (G.cols() != A.rows()) {
    throw DimensionError("dimension mismatch: G must have as many columns "
                         "as A has rows");
  }
  return IsStabilizable(A.transpose(), G.transpose());
}

MatrixXd LyapunovStep(const Eigen::Ref<const MatrixXd>& Kprev,
                      const Eigen::Ref<const MatrixXd>& Acl,
                      const Eigen::Ref<const MatrixXd>& W) {
  RequireSquare(Acl, "Acl");
  if (Kprev.rows() != Acl.rows() || Kprev.cols() != Acl.cols() ||
      W.rows() != Acl.rows() || W.cols() != Acl.cols()) {
    throw DimensionError("dimension mismatch in Lyapunov step");
  }
  return Symmetrize(Acl * Kprev * Acl.transpose() + W);
}

double LyapunovResidual(const Eigen::Ref<const MatrixXd>& Sigma,
                        const Eigen::Ref<const MatrixXd>& Acl,
                        const Eigen::Ref<const MatrixXd>& W) {
  return (Sigma - Acl * Sigma * Acl.transpose() - W).norm();
}

MatrixXd SolveLyapunov(const Eigen::Ref<const MatrixXd>& Acl,
                       const Eigen::Ref<const MatrixXd>& W) {
  RequireSquare(Acl, "Acl");
  if (W.rows() != Acl.rows() || W.cols() != Acl.cols()) {
    throw DimensionError("dimension mismatch: W must match Acl");
  }
  if (!SpectralRadius(Acl).stable) {
    throw PreconditionError(
        "closed-loop matrix not exponentially stable; Lyapunov equation has "
        "no unique solution");
  }
  const int p = static_cast<int>(Acl.rows());
  const int m = p * (p + 1) / 2;
  // Unknowns sigma_kl, k <= l, in row-major upper-triangular order.
  std::vector<std::pair<int, int>> index;
  index.reserve(m);
  for (int k = 0; k < p; ++k) {
    for (int l = k; l < p; ++l) index.emplace_back(k, l);
  }
  MatrixXd lhs = MatrixXd::Zero(m, m);
  VectorXd rhs(m);
  const MatrixXd Ws = Symmetrize(W);
  for (int row = 0; row < m; ++row) {
    const auto [i, j] = index[row];
    rhs(row) = Ws(i, j);
    for (int col = 0; col < m; ++col) {
      const auto [k, l] = index[col];
      // (A Σ Aᵀ)_ij = Σ_kl A_ik A_jl Σ_kl, with Σ_kl = Σ_lk.
      double coeff = Acl(i, k) * Acl(j, l);
      if (k != l) coeff += Acl(i, l) * Acl(j, k);
      lhs(row, col) = (row == col ? 1.0 : 0.0) - coeff;
    }
  }
  const VectorXd x = lhs.fullPivLu().solve(rhs);
  MatrixXd sigma(p, p);
  for (int c = 0; c < m; ++c) {
    const auto [k, l] = index[c];
    sigma(k, l) = x(c);
    sigma(l, k) = x(c);
  }
  const double residual = LyapunovResidual(sigma, Acl, Ws);
  if (!(residual <= tol::kLyapunov * (1.0 + Ws.norm()))) {
    throw ConvergenceError("Lyapunov solve residual " +
                           std::to_string(residual) + " above tolerance");
  }
  return sigma;
}

}  // namespace dirinfo
