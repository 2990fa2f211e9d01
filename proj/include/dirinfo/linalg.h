#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace dirinfo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd Symmetrize(const Eigen::Ref<const MatrixXd>& m) {
  return 0.5 * (m + m.transpose());
}

/// Smallest eigenvalue of the symmetric part of `m`. Empty matrices report 0.
inline double MinEigenvalue(const Eigen::Ref<const MatrixXd>& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Symmetrize(m),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool IsSymmetric(const Eigen::Ref<const MatrixXd>& m,
                        double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// PSD up to `rel_tol` relative to the largest eigenvalue magnitude.
inline bool IsPsd(const Eigen::Ref<const MatrixXd>& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Symmetrize(m),
                                             Eigen::EigenvaluesOnly);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  return es.eigenvalues().minCoeff() >= -rel_tol * scale;
}

inline bool IsPositiveDefinite(const Eigen::Ref<const MatrixXd>& m) {
  if (m.rows() != m.cols() || m.size() == 0) return false;
  return MinEigenvalue(m) > 0.0;
}

/// Symmetric square root of a PSD matrix; negative eigenvalues are clipped.
inline MatrixXd SymmetricSqrt(const Eigen::Ref<const MatrixXd>& m) {
  if (m.size() == 0) return MatrixXd(m.rows(), m.cols());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Symmetrize(m));
  const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() *
         es.eigenvectors().transpose();
}

/// Euclidean projection onto the PSD cone (eigenvalue clipping).
inline MatrixXd ProjectPsd(const Eigen::Ref<const MatrixXd>& m) {
  if (m.rows() == 1) return MatrixXd::Constant(1, 1, std::max(0.0, m(0, 0)));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Symmetrize(m));
  const VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  return Symmetrize(es.eigenvectors() * clipped.asDiagonal() *
                    es.eigenvectors().transpose());
}

/// log det of a symmetric positive definite matrix; NaN if not PD.
inline double LogDetSpd(const Eigen::Ref<const MatrixXd>& m) {
  Eigen::LLT<MatrixXd> llt(Symmetrize(m));
  if (llt.info() != Eigen::Success) return std::nan("");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace dirinfo
