#pragma once

// Seeded randomness. The engine is std::mt19937_64, whose output sequence is fixed
// by the standard; uniforms are built from the top 53 bits so they do not depend on
// the library's uniform_real_distribution.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace cvqkd {

inline constexpr const char* kRngAlgorithm = "mt19937_64";

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }

  /// Circular complex Gaussian with variance `var_per_quadrature` on each of re/im.
  std::complex<double> complex_normal(double var_per_quadrature) {
    const double s = std::sqrt(var_per_quadrature);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derive an independent child seed (splitmix64 finalizer) for a named stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace cvqkd
