// Seeded random source with platform-independent output.
//
// std::mt19937_64 is fully specified by the standard, but the std::*_distribution
// adaptors are not, so conversion to doubles and bounded integers is done here.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace asc {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a of a string.
std::uint64_t fnv1a(std::string_view text);

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Per-stage seed: mix64(global ^ fnv1a(stage)). Stages stay independent while
/// a single global seed controls a whole run.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage);

}  // namespace asc
