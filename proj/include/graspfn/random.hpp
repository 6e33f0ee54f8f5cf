#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace graspfn {

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent sub-stream seed from a master seed, a stream name
/// ("scene", "noise", "jitter", ...) and any number of integer keys.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::initializer_list<std::uint64_t> keys = {});

/// Seeded generator with platform-independent uniform and normal draws.
/// std::*_distribution output is implementation-defined, so the samplers
/// here are written out against the raw 64-bit engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace graspfn
