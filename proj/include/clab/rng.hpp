#ifndef CLAB_RNG_HPP
#define CLAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

#include "clab/types.hpp"

namespace clab {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Fixed byte-level algorithm
// so that derived streams are identical on every platform.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Collision-resistant stream key from (master seed, realization index, site,
/// parity tag). Each component is absorbed through one SplitMix64 round.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t realization_index,
                                 std::int64_t site, std::uint64_t parity_tag) {
  std::uint64_t k = mix64(master);
  k = mix64(k ^ mix64(realization_index ^ 0xA511E9B3CD261405ULL));
  k = mix64(k ^ mix64(static_cast<std::uint64_t>(site) ^ 0x6A09E667F3BCC909ULL));
  k = mix64(k ^ mix64(parity_tag ^ 0xBB67AE8584CAA73BULL));
  return k;
}

/// Counter-based deterministic stream: state advances through SplitMix64.
/// Normal variates via Box-Muller so results do not depend on any library's
/// std::normal_distribution implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  /// Uniform in [0,1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal (mean 0, variance 1) via the polar (Marsaglia) method;
  /// trig-free, so about twice the throughput of basic Box-Muller here.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * m;
    have_cached_ = true;
    return u * m;
  }

  /// Complex normal with E|z|^2 = 1.
  Complex next_complex_normal() {
    const double inv_sqrt2 = 0.7071067811865475244;
    return Complex(next_normal() * inv_sqrt2, next_normal() * inv_sqrt2);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace clab

#endif
