#pragma once

// Seeded random source with platform-independent draws. The standard
// distributions are implementation-defined, so uniform and normal variates
// are built here from the raw 64-bit engine output.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace microgrid {

/// splitmix64 mix of (seed, stream); used to give independent substreams
/// (per stage, per scenario) a seed of their own.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (the second variate is cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Poisson count (Knuth's product method; fine for small means).
  int poisson(double mean);

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace microgrid
