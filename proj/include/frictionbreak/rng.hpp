#pragma once

#include <cstddef>
#include <cstdint>

namespace frictionbreak {

/// SplitMix64 output function (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Inverse standard normal CDF, Wichura's AS 241 (PPND16). |relative error| < 1e-16.
double normal_quantile_as241(double p);

/// Counter-based random stream.
///
/// Substream key: k = mix(seed XOR mix(stream + 0x9E3779B97F4A7C15)).
/// Draw i (0-based): u_i = ((mix(k + (i + 1) * 0x9E3779B97F4A7C15) >> 11) + 0.5) * 2^-53,
/// which lies strictly inside (0, 1). Normals are AS 241 applied to u_i, one
/// uniform per normal. Each (seed, stream) pair is an independent sequence
/// that can be reproduced in any language from this description alone.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64_mix(seed ^ splitmix64_mix(stream + 0x9E3779B97F4A7C15ULL))) {}

  double uniform() {
    ++counter_;
    const std::uint64_t bits = splitmix64_mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }
  double normal() { return normal_quantile_as241(uniform()); }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }
  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace frictionbreak
