#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ecan {

// Deterministic random source. All draws go through explicit conversions
// (53-bit uniforms, Box-Muller normals, rejection-sampled bounded ints)
// instead of std distributions, whose output is implementation-defined.
// Identical seeds therefore give identical streams on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal();

  /// Unbiased integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Collapses up to three seed components into one stream key.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace ecan
