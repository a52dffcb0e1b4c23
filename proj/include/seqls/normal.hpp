#pragma once

// Standard-normal primitives, Gauss-Hermite rules and counter-based noise
// shared by the policy, learner and diagnostics code.

#include <cmath>
#include <cstdint>
#include <vector>

namespace seqls {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

/// Standard normal density.
inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

/// Nodes and weights for E[f(Z)], Z ~ N(0,1): sum_i weights[i] * f(nodes[i]).
/// The weights already absorb the Gaussian density and sum to one.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule with `n` nodes (n >= 1). Thread-safe.
const GaussHermiteRule& gauss_hermite_rule(int n);

// Seed mixing with the splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a) {
  return mix64(base ^ mix64(a + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(base, a), b);
}

/// Fills `out` with standard normals that depend only on (seed, key).
/// Used for common random numbers: the same context key always sees the
/// same draws for a given seed.
void counter_normals(std::uint64_t seed, std::uint64_t key, std::vector<double>& out);

}  // namespace seqls
