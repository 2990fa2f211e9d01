#pragma once

#include <complex>
#include <vector>

#include "dirinfo/linalg.h"

namespace dirinfo {

/// Eigenvalues of a square matrix and open-unit-disc membership.
struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;
  double spectral_radius = 0.0;
  /// spectral_radius < 1 - tol::kSpectral.
  bool stable = true;
};

/// Throws DimensionError on non-square input.
SpectrumReport SpectralRadius(const Eigen::Ref<const MatrixXd>& A);

/// Numerical rank by SVD with threshold tol::kRank * sigma_max.
int NumericalRank(const Eigen::Ref<const MatrixXd>& m);

/// rank [B, AB, ..., A^{n-1}B] == n.
bool IsControllable(const Eigen::Ref<const MatrixXd>& A,
                    const Eigen::Ref<const MatrixXd>& B);

/// (C, A) observable iff (A^T, C^T) controllable.
bool IsObservable(const Eigen::Ref<const MatrixXd>& C,
                  const Eigen::Ref<const MatrixXd>& A);

/// PBH test: rank [A - lambda I, B] == n for every eigenvalue with
/// |lambda| >= 1 - tol::kSpectral.
bool IsStabilizable(const Eigen::Ref<const MatrixXd>& A,
                    const Eigen::Ref<const MatrixXd>& B);

/// (G, A) detectable iff (A^T, G^T) stabilizable.
bool IsDetectable(const Eigen::Ref<const MatrixXd>& G,
                  const Eigen::Ref<const MatrixXd>& A);

/// One step of the covariance recursion K = Acl Kprev Acl^T + W.
MatrixXd LyapunovStep(const Eigen::Ref<const MatrixXd>& Kprev,
                      const Eigen::Ref<const MatrixXd>& Acl,
                      const Eigen::Ref<const MatrixXd>& W);

/// Unique symmetric solution of Sigma = Acl Sigma Acl^T + W for stable Acl.
///
/// Solves the linear system over the p(p+1)/2 independent entries of Sigma.
/// Throws PreconditionError("... not exponentially stable") when Acl is not
/// in the open unit disc, and ConvergenceError if the residual check fails.
MatrixXd SolveLyapunov(const Eigen::Ref<const MatrixXd>& Acl,
                       const Eigen::Ref<const MatrixXd>& W);

/// ||Sigma - Acl Sigma Acl^T - W||_F.
double LyapunovResidual(const Eigen::Ref<const MatrixXd>& Sigma,
                        const Eigen::Ref<const MatrixXd>& Acl,
                        const Eigen::Ref<const MatrixXd>& W);

}  // namespace dirinfo
