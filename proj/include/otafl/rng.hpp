#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace otafl {

// 64-bit seed mixing (splitmix64 finalizer). Used to derive independent
// substreams from a master seed: every stochastic draw in the simulator comes
// from an Rng that is a pure function of (master seed, tag, indices), which is
// what makes whole runs byte-reproducible.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t tag) {
    return Rng(mix_seed(seed, tag));
  }
  static Rng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a) {
    return Rng(mix_seed(mix_seed(seed, tag), a));
  }
  static Rng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                    std::uint64_t b) {
    return Rng(mix_seed(mix_seed(mix_seed(seed, tag), a), b));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw in [0, 1) with 53 bits of resolution.
  double uniform();

  /// Standard normal via Box-Muller (pairs cached). Hand-rolled rather than
  /// std::normal_distribution so the stream is identical across stdlibs.
  double normal();

  /// Circularly-symmetric complex normal with E[|z|^2] = 1.
  std::complex<double> cnormal();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace otafl
