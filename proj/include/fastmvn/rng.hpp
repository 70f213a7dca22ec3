// Seeded pseudorandom streams.
//
// The generator is SplitMix64: a 64-bit counter advanced by a fixed odd
// increment, with the output produced by an avalanche mix of the counter.
// It is a pure integer recurrence, so streams are bit-reproducible across
// platforms, and independent streams for parallel trials are derived by
// hashing (seed, index) pairs rather than by jumping one shared stream.
//
// Standard normal variates use the Marsaglia polar method; variates are
// produced in pairs and the spare is cached as part of the stream state.
// This choice is fixed: tests freeze expected sample streams.
#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "fastmvn/errors.hpp"

namespace fastmvn {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace detail

/// Hash-combine a base seed with an index; used to give every trial,
/// document, or parallel chain its own independent stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return detail::mix64(detail::mix64(base) ^ (index + 0x632be59bd9b4e019ULL));
}

class RngState {
public:
  explicit RngState(std::uint64_t seed) : state_(detail::mix64(seed)) {}

  static RngState derived(std::uint64_t base, std::uint64_t index) {
    return RngState(derive_seed(base, index));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on (0, 1); 53-bit resolution, never returns 0 or 1.
  double uniform() {
    if (zero_noise_) return 0.5;
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method (pair cached).
  double normal() {
    if (zero_noise_) return 0.0;
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = normal();
    return x;
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape < 1 handled by the
  /// boost Gamma(shape+1) * U^(1/shape).
  double gamma(double shape) {
    if (!(shape > 0.0)) throw InvalidArgument("gamma shape must be > 0");
    if (shape < 1.0)
      return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
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

  Eigen::VectorXd dirichlet(const Eigen::VectorXd& alpha) {
    Eigen::VectorXd g(alpha.size());
    for (Eigen::Index i = 0; i < alpha.size(); ++i) g[i] = gamma(alpha[i]);
    const double s = g.sum();
    if (!(s > 0.0)) throw InvalidArgument("dirichlet: degenerate draw");
    return g / s;
  }

  /// Poisson by Knuth's product method; fine for the moderate means used
  /// by the corpus generator.
  long poisson(double mean) {
    if (!(mean >= 0.0)) throw InvalidArgument("poisson mean must be >= 0");
    const double limit = std::exp(-mean);
    long n = 0;
    double p = 1.0;
    do {
      ++n;
      p *= uniform();
    } while (p > limit);
    return n - 1;
  }

  /// Test hook: normal() returns 0 and uniform() returns 0.5, so samplers
  /// propagate their means deterministically.
  void set_zero_noise(bool on) { zero_noise_ = on; }
  bool zero_noise() const { return zero_noise_; }

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
  bool zero_noise_ = false;
};

} // namespace fastmvn
