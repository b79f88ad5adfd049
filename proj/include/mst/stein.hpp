#pragma once

// stein.hpp -- the bounded solution of the N(0,1) Stein equation
//
//     f'(x) - x f(x) = 1_{(-inf,z]}(x) - P[Z <= z]
//
// for half-line test functions, its one-sided derivatives, the pointwise
// residual, and a Monte Carlo check of the tail identity the equation
// yields for arbitrary square-integrable inputs.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mst/gaussian.hpp"
#include "mst/stats.hpp"

namespace mst {

// Each branch is arranged so that exp((x^2 - z^2)/2) only ever sees a
// nonpositive exponent and every exp(x^2/2)*tail product goes through
// scaled_normal_tail; the branches stay finite for |x|, |z| up to ~38.
inline double stein_solution(double z, double x) {
  if (x <= z) {
    // f(x) = sqrt(2pi) e^{x^2/2} Phi(x) * P[Z > z]
    if (x <= 0.0) return kSqrt2Pi * scaled_normal_tail(-x) * normal_tail(z);
    // 0 < x <= z, so x^2 <= z^2
    return kSqrt2Pi * (1.0 - normal_tail(x)) * std::exp(0.5 * (x - z) * (x + z)) *
           scaled_normal_tail(z);
  }
  // f(x) = sqrt(2pi) Phi(z) * e^{x^2/2} P[Z > x]
  if (x >= 0.0) return kSqrt2Pi * (1.0 - normal_tail(z)) * scaled_normal_tail(x);
  // z < x < 0, so x^2 < z^2
  return kSqrt2Pi * scaled_normal_tail(-z) * std::exp(0.5 * (x - z) * (x + z)) * normal_tail(x);
}

namespace detail {

// derivative of the x <= z branch
inline double stein_derivative_below(double z, double x) {
  if (x <= 0.0) return normal_tail(z) * (1.0 + kSqrt2Pi * x * scaled_normal_tail(-x));
  return normal_tail(z) + kSqrt2Pi * x * (1.0 - normal_tail(x)) *
                              std::exp(0.5 * (x - z) * (x + z)) * scaled_normal_tail(z);
}

// derivative of the x > z branch
inline double stein_derivative_above(double z, double x) {
  if (x >= 0.0) return (1.0 - normal_tail(z)) * (kSqrt2Pi * x * scaled_normal_tail(x) - 1.0);
  return kSqrt2Pi * x * normal_tail(x) * std::exp(0.5 * (x - z) * (x + z)) *
             scaled_normal_tail(-z) -
         normal_tail(-z);
}

}  // namespace detail

// One-sided derivatives; they only disagree at the jump point x = z, where
// the solution has a kink of size P[Z <= z] - ... - 1 (unit jump in the
// test function).
inline double stein_derivative_left(double z, double x) {
  return (x <= z) ? detail::stein_derivative_below(z, x) : detail::stein_derivative_above(z, x);
}

inline double stein_derivative_right(double z, double x) {
  return (x < z) ? detail::stein_derivative_below(z, x) : detail::stein_derivative_above(z, x);
}

inline double stein_derivative(double z, double x) {
  if (x == z)
    throw std::domain_error("stein_derivative: x = z is the jump point; use the one-sided variants");
  return stein_derivative_left(z, x);
}

// [1_{x<=z} - P[Z<=z]] - [f'(x) - x f(x)], branch-consistently (left
// derivative at the jump).  Identically zero in exact arithmetic.
inline double stein_residual(double z, double x) {
  const double f = stein_solution(z, x);
  const double fp =
      (x <= z) ? detail::stein_derivative_below(z, x) : detail::stein_derivative_above(z, x);
  const double lhs = ((x <= z) ? 1.0 : 0.0) - (1.0 - normal_tail(z));
  return lhs - (fp - x * f);
}

struct TailIdentityRecord {
  double z;
  double lhs;  // empirical P[X > z]
  double rhs;  // normal_tail(z) - E f'(X) + E[X f(X)]
  double se;   // standard error of lhs - rhs
  std::size_t n;
  std::uint64_t seed;
};

// Checks P[X > z] = P[Z > z] - E f'(X) + E[X f(X)], which is the Stein
// equation evaluated at X and averaged -- an identity for every X with
// E|X| < inf, Gaussian or not.  The sampler is called with an RngStream.
template <class Sampler>
TailIdentityRecord tail_identity_mc(Sampler&& sample, double z, std::size_t n,
                                    std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("tail_identity_mc: need n >= 2");
  RngStream rng(seed, "tail-identity");
  double sum_ind = 0.0, sum_fp = 0.0, sum_xf = 0.0;
  double sum_d = 0.0, sum_d2 = 0.0;
  double first = 0.0;
  bool constant = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sample(rng);
    if (i == 0)
      first = x;
    else if (x != first)
      constant = false;
    const double f = stein_solution(z, x);
    const double fp =
        (x <= z) ? detail::stein_derivative_below(z, x) : detail::stein_derivative_above(z, x);
    const double ind = (x > z) ? 1.0 : 0.0;
    sum_ind += ind;
    sum_fp += fp;
    sum_xf += x * f;
    // lhs - rhs = mean(d) - normal_tail(z), so sd(d)/sqrt(n) is the se of the gap
    const double d = ind + fp - x * f;
    sum_d += d;
    sum_d2 += d * d;
  }
  if (constant) throw std::domain_error("tail_identity_mc: degenerate sampler (zero variance)");
  const double nd = static_cast<double>(n);
  const double lhs = sum_ind / nd;
  const double rhs = normal_tail(z) - sum_fp / nd + sum_xf / nd;
  const double md = sum_d / nd;
  const double var_d = std::max(0.0, sum_d2 / nd - md * md) * nd / (nd - 1.0);
  return {z, lhs, rhs, std::sqrt(var_d / nd), n, seed};
}

}  // namespace mst
