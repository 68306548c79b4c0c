#pragma once

#include <cmath>
#include <cstdint>

namespace svrank {

// Counter-based generator (SplitMix64): the state advances by a fixed
// increment, so jumping to an arbitrary position is O(1) and independent
// streams are derived by hashing (seed, stream_id) pairs.  All simulation
// code draws through this engine so results are reproducible regardless of
// how replications are scheduled.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Stream splitting: finalizer applied to the pair makes derived seeds
  // statistically independent of each other and of the parent stream.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Random stream with the handful of distributions the simulations need.
// Self-contained (no std::*_distribution) so sequences are identical across
// standard library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed), base_seed_(seed) {}

  RandomStream substream(std::uint64_t stream) const {
    return RandomStream(SplitMix64::derive(base_seed_, stream));
  }

  static RandomStream from(std::uint64_t seed, std::uint64_t stream) {
    return RandomStream(SplitMix64::derive(seed, stream));
  }

  // Uniform on (0,1), 53-bit resolution, never exactly 0.
  double uniform() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // Marsaglia polar method.
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    have_cached_ = true;
    return u * f;
  }

  double exponential() { return -std::log(uniform()); }

  // Marsaglia-Tsang; unit scale.
  double gamma(double alpha) {
    if (alpha < 1.0) {
      const double u = uniform();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

  double student_t(double df) {
    return normal() / std::sqrt(chi_squared(df) / df);
  }

 private:
  SplitMix64 engine_;
  std::uint64_t base_seed_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace svrank
