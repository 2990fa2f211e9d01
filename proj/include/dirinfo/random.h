#pragma once

#include <array>
#include <cstdint>

namespace dirinfo {

/// Philox4x32-10 counter-based generator.
///
/// The stream is fully determined by (key, counter); `Split` derives an
/// independent stream by hashing a stream id into the key.
class Philox4x32 {
 public:
  using Block = std::array<uint32_t, 4>;

  explicit Philox4x32(uint64_t seed = 0, uint64_t stream = 0);

  /// Raw block for an explicit counter and key; no state change.
  static Block Generate(const Block& counter, const std::array<uint32_t, 2>& key);

  uint32_t NextU32();
  /// Uniform double strictly inside (0, 1), 53-bit resolution.
  double NextUniform();
  /// Standard normal through the inverse CDF of NextUniform().
  double NextNormal();

  Philox4x32 Split(uint64_t stream) const;

 private:
  std::array<uint32_t, 2> key_;
  Block counter_{};
  Block buffer_{};
  int used_ = 4;
};

/// Inverse of the standard normal CDF for p in (0, 1).
///
/// Rational approximation (|relative error| < 1.2e-9) followed by one Halley
/// refinement against erfc. Throws std::domain_error outside (0, 1).
double NormalQuantile(double p);

/// Standard normal CDF.
double NormalCdf(double x);

}  // namespace dirinfo
