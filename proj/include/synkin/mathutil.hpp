#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace synkin {

// Standard normal CDF, accurate to ~1e-15 via erfc.
double normal_cdf(double z);

// Standard normal quantile (inverse CDF) for p in (0, 1), Wichura's AS 241
// rational approximation (double-precision branch, ~1e-15 relative).
double normal_quantile(double p);

// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1],
// evaluated by the Lentz continued fraction with the standard symmetry split.
double regularized_incomplete_beta(double a, double b, double x);

// Survival function P(F > x) of the F distribution with d1, d2 > 0 degrees of
// freedom; exact in terms of the regularized incomplete beta.
double f_distribution_sf(double x, double d1, double d2);

// SplitMix64 step; used to derive well-separated stream seeds from a base
// seed and a path of integers (subject id, condition index, stream tag).
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

// Deterministic random source. Distribution mappings are implemented here
// rather than with std:: distributions so that streams are bit-reproducible
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0, 1]; never returns zero.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * (uniform01() - 0x1.0p-53); }

  // Standard normal via Box-Muller; caches the second deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace synkin
