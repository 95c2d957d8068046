#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <algorithm>
#include <vector>

namespace vrsd {

/// Seedable generator used by every stochastic component.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distributions on top of it are implemented here rather than
/// taken from <random>, since the standard distributions are not required to
/// produce the same values across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (one cached spare).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// `count` distinct values from [0, bound), Floyd's algorithm.
  /// Returned as a membership mask of length `bound`.
  std::vector<char> sample_mask(std::size_t bound, std::size_t count) {
    std::vector<char> mask(bound, 0);
    if (count >= bound) {
      std::fill(mask.begin(), mask.end(), 1);
      return mask;
    }
    for (std::size_t j = bound - count; j < bound; ++j) {
      const auto t = static_cast<std::size_t>(uniform_index(j + 1));
      if (mask[t]) {
        mask[j] = 1;
      } else {
        mask[t] = 1;
      }
    }
    return mask;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vrsd
