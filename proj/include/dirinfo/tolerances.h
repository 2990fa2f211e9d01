#pragma once

namespace dirinfo {

// Numerical margins shared by every module. Reports echo this set.
namespace tol {

/// PSD checks: eigenvalues >= -kPsd * (largest eigenvalue magnitude).
inline constexpr double kPsd = 1e-10;
/// Open unit disc membership: spectral radius < 1 - kSpectral.
inline constexpr double kSpectral = 1e-9;
/// Numerical rank: singular values above kRank * sigma_max count.
inline constexpr double kRank = 1e-9;
/// Lyapunov residual, relative to 1 + ||W||_F.
inline constexpr double kLyapunov = 1e-10;
/// Riccati fixed-point residual, relative to 1 + ||P||_F.
inline constexpr double kRiccati = 1e-11;
inline constexpr int kRiccatiMaxIter = 100000;
/// Water-filling stationarity and complementarity.
inline constexpr double kWaterfill = 1e-9;
inline constexpr int kWaterfillMaxIter = 50000;
/// Regularization added to the undriven block of an augmented noise
/// covariance when it has to be inverted.
inline constexpr double kAugmentRegularization = 1e-12;
/// Relative accuracy of the multiplier search on the cost constraint.
inline constexpr double kConstraint = 1e-10;

}  // namespace tol
}  // namespace dirinfo
