#pragma once

#include <cstdint>
#include <random>

namespace gmab {

/// SplitMix64 finalizer. Used to spread user seeds and replication indices
/// into well-mixed engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded random stream with a platform-stable output sequence.
///
/// Draws come from std::mt19937_64 (sequence pinned by the standard) and are
/// converted to doubles/integers here instead of through std::*_distribution,
/// whose output is implementation-defined. Replication r of a run with base
/// seed s uses the stream `Rng::stream(s, r)`; the derivation rule is
/// mt19937_64 seeded with splitmix64(splitmix64(s) + r).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t base_seed, std::uint64_t index) {
    return Rng(splitmix64(base_seed) + index);
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). Multiply-shift; bias is < 2^-64 per draw.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(gen_()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gmab
