#pragma once

// tail_engine.hpp -- reconstruct a density and upper tail from a
// conditional-variance profile g, and evaluate the closed-form constants,
// lower bounds, and envelopes that sandwich such tails.
//
// Everything is anchored at the identity  A(x) = exp(-int_0^x y/g(y) dy),
// -A'(y) = y A(y)/g(y), under which
//     density(z) = (E|X|/2) A(z)/g(z)
//     P[X > x]   = (E|X|/2) int_x^inf A(y)/g(y) dy.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mst/gaussian.hpp"
#include "mst/gfunction.hpp"
#include "mst/quadrature.hpp"

namespace mst {

namespace detail {

inline void check_anchor(const GFunction& g, double x) {
  const double lo = std::min(x, 0.0);
  if (!(g.support_left < lo))
    throw std::domain_error("g support does not contain the integration range down to 0");
}

}  // namespace detail

// A(x) = exp(-int_0^x y/g(y) dy); equals 1 at 0, nonincreasing on [0, inf).
inline double decay_factor(const GFunction& g, double x, double tol = 1e-10) {
  detail::check_anchor(g, x);
  auto integrand = [&g](double y) {
    const double gy = g(y);
    if (!(gy > 0.0)) throw std::domain_error("decay_factor: g is not positive on the range");
    return y / gy;
  };
  return std::exp(-adaptive_simpson(integrand, 0.0, x, tol));
}

// (E|X|/2) A(z) / g(z)
inline double density_from_g(const GFunction& g, double mean_abs, double z, double tol = 1e-10) {
  if (!(mean_abs > 0.0)) throw std::invalid_argument("density_from_g: mean_abs must be positive");
  if (!(z > g.support_left)) throw std::domain_error("density_from_g: z outside the support");
  const double gz = g(z);
  if (!(gz > 0.0)) throw std::domain_error("density_from_g: g(z) must be positive");
  return 0.5 * mean_abs * decay_factor(g, z, tol) / gz;
}

struct TailEvaluation {
  double value;            // (E|X|/2) int_x^Y A/g
  double truncation_y;     // Y
  double remainder_bound;  // (E|X|/2) A(Y)/Y >= discarded mass
  bool extrapolated;       // a tabulated g was evaluated beyond its grid
};

// P[X > x] for x > 0 via the absolutely convergent form (E|X|/2) int A/g.
// The truncation point doubles until the remainder bound
//   int_Y^inf A/g = int_Y^inf (-A')/y <= A(Y)/Y
// drops below tol; if A stalls while that bound is still large the
// configuration is not integrable (g growing superquadratically) and is
// rejected.
inline TailEvaluation tail_from_g(const GFunction& g, double mean_abs, double x,
                                  double tol = 1e-10, double inner_tol = 1e-10) {
  if (!(x > 0.0)) throw std::invalid_argument("tail_from_g: x must be positive");
  if (!(mean_abs > 0.0)) throw std::invalid_argument("tail_from_g: mean_abs must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("tail_from_g: tol must be positive");

  const double log_a_x = -adaptive_simpson(
      [&g](double y) {
        const double gy = g(y);
        if (!(gy > 0.0)) throw std::domain_error("tail_from_g: g is not positive on the range");
        return y / gy;
      },
      0.0, x, inner_tol);

  double y_hi = std::max(2.0 * x, x + 1.0);
  double log_a_hi = log_a_x - adaptive_simpson([&g](double y) { return y / g(y); }, x, y_hi, inner_tol);
  int doublings = 0;
  while (0.5 * mean_abs * std::exp(log_a_hi) / y_hi > tol) {
    if (++doublings > 48)
      throw std::domain_error("tail_from_g: A/g does not decay; configuration not integrable");
    const double y_next = 2.0 * y_hi;
    const double log_a_next =
        log_a_hi - adaptive_simpson([&g](double y) { return y / g(y); }, y_hi, y_next, inner_tol);
    if (log_a_hi - log_a_next < 0.005)  // A(2Y)/A(Y) > ~0.995: A has stalled
      throw std::domain_error("tail_from_g: A stalled before the remainder bound was met; "
                              "g appears to grow superquadratically");
    y_hi = y_next;
    log_a_hi = log_a_next;
  }

  auto integrand = [&g, log_a_x, x, inner_tol](double y) {
    const double gy = g(y);
    if (!(gy > 0.0)) throw std::domain_error("tail_from_g: g is not positive on the range");
    const double log_a =
        log_a_x - adaptive_simpson([&g](double t) { return t / g(t); }, x, y, inner_tol);
    return std::exp(log_a) / gy;
  };
  const double integral = adaptive_simpson(integrand, x, y_hi, tol);

  bool extrapolated = !g.covers(y_hi) || !g.covers(x);
  return {0.5 * mean_abs * integral, y_hi, 0.5 * mean_abs * std::exp(log_a_hi) / y_hi,
          extrapolated};
}

struct BoundPrefactor {
  double K;       // (E|X|/2) c'^{c'} / (1+c')^{1+c'}
  double k_star;  // (1 + 1/c')^{c'}, the maximizing window ratio
};

// Prefactor of the lower bound P[X > x] >= K A(x)/x valid when g <= c' y^2
// beyond some z0 < x; K comes from maximizing (1 - k^{-1/c'})/k over the
// window [x, kx].
inline BoundPrefactor lower_bound_prefactor(double cprime, double mean_abs) {
  if (!(cprime > 0.0 && cprime < 1.0))
    throw std::invalid_argument("lower_bound_prefactor: cprime must be in (0,1)");
  if (!(mean_abs > 0.0)) throw std::invalid_argument("lower_bound_prefactor: mean_abs positive");
  const double K =
      0.5 * mean_abs * std::pow(cprime, cprime) / std::pow(1.0 + cprime, 1.0 + cprime);
  return {K, std::pow(1.0 + 1.0 / cprime, cprime)};
}

namespace detail {

// sup of (a + b y)/y^2 over [lo, hi]; the only interior extremum is at
// y = -2a/b, a maximum exactly when a < 0
inline double sup_ratio_linear(double a, double b, double lo, double hi) {
  auto val = [a, b](double y) { return (a + b * y) / (y * y); };
  double s = std::max(val(lo), val(hi));
  if (b != 0.0) {
    const double yc = -2.0 * a / b;
    if (yc > lo && yc < hi) s = std::max(s, val(yc));
  }
  return s;
}

}  // namespace detail

// sup_{y > z0} g(y)/y^2, exact for every form (piecewise-linear pieces are
// maximized analytically).  Throws when the ratio is unbounded.
inline double quadratic_cap(const GFunction& g, double z0) {
  if (!(z0 > 0.0)) throw std::invalid_argument("quadratic_cap: z0 must be positive");
  if (const auto* c = std::get_if<GConstant>(&g.form)) return c->c / (z0 * z0);
  if (const auto* q = std::get_if<GQuadratic>(&g.form)) return q->cprime;
  if (const auto* a = std::get_if<GAffine>(&g.form)) {
    // ratio -> 0 at infinity; candidates are z0 and the interior extremum
    double s = (a->alpha + a->beta * z0) / (z0 * z0);
    if (a->beta != 0.0) {
      const double yc = -2.0 * a->alpha / a->beta;
      if (yc > z0) s = std::max(s, (a->alpha + a->beta * yc) / (yc * yc));
    }
    return s;
  }
  if (const auto* p = std::get_if<GPower>(&g.form)) {
    double s = 0.0;
    const double zmain = std::max(z0, p->z0);
    if (p->p > 2.0) throw std::domain_error("quadratic_cap: g grows faster than quadratically");
    s = (p->p == 2.0) ? p->c1 : p->c1 * std::pow(zmain, p->p - 2.0);
    // prefix region [z0, p->z0), piecewise linear
    for (std::size_t i = 0; i + 1 < p->prefix_grid.size(); ++i) {
      const double lo = std::max(z0, p->prefix_grid[i]);
      const double hi = std::min(p->z0, p->prefix_grid[i + 1]);
      if (lo >= hi) continue;
      const double b =
          (p->prefix_values[i + 1] - p->prefix_values[i]) / (p->prefix_grid[i + 1] - p->prefix_grid[i]);
      const double a0 = p->prefix_values[i] - b * p->prefix_grid[i];
      s = std::max(s, detail::sup_ratio_linear(a0, b, lo, hi));
    }
    return s;
  }
  const auto& t = std::get<GTabulated>(g.form);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < t.grid.size(); ++i) {
    const double lo = std::max(z0, t.grid[i]);
    const double hi = t.grid[i + 1];
    if (lo >= hi) continue;
    const double b = (t.values[i + 1] - t.values[i]) / (t.grid[i + 1] - t.grid[i]);
    const double a0 = t.values[i] - b * t.grid[i];
    s = std::max(s, detail::sup_ratio_linear(a0, b, lo, hi));
  }
  // constant extrapolation beyond the grid (and before it, clamped at z0)
  const double edge = std::max(z0, t.grid.back());
  s = std::max(s, t.values.back() / (edge * edge));
  if (z0 < t.grid.front()) s = std::max(s, t.values.front() / (z0 * z0));
  return s;
}

enum class TailRegime { gaussian, power, stretched };

struct TailBoundCase {
  TailRegime regime = TailRegime::gaussian;
  double cdd = 0.0;       // power: g >= cdd y^2 beyond z0 (0 < cdd <= c')
  double c1 = 0.0;        // stretched: g >= c1 y^p beyond z0
  double p = 0.0;         // stretched exponent, p < 2
  double z0 = 0.0;        // hypothesis threshold; <= 0 selects it automatically
  bool reversed = false;  // hypotheses reversed: value becomes an upper envelope
};

struct TailBound {
  double value;
  double prefactor;    // K(c') for lower bounds, E|X|/2 for reversed (upper) ones
  double cprime;       // quadratic cap actually used (NaN when not needed)
  double z0;           // threshold actually used
  bool upper_envelope; // true iff the case was reversed
};

namespace detail {

inline void require_g_at_least(const GFunction& g, double level_c1, double level_p, double lo,
                               double hi, bool reversed, const char* what) {
  // probe densely in log scale; the hypothesis is about the whole half-line,
  // and every admissible form is eventually monotone against the comparison
  // curve, so a wide probe range is decisive in practice
  const int n = 4096;
  const double l0 = std::log(std::max(lo, 1e-8)), l1 = std::log(hi);
  for (int i = 0; i <= n; ++i) {
    const double y = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / n);
    const double target = level_c1 * ((level_p == 0.0) ? 1.0 : std::pow(y, level_p));
    const double gy = g(y);
    const double slack = 1e-9 * std::max(1.0, std::fabs(target));
    if (!reversed && gy < target - slack)
      throw std::invalid_argument(std::string(what) + ": hypothesis g >= comparison fails near y=" +
                                  std::to_string(y));
    if (reversed && gy > target + slack)
      throw std::invalid_argument(std::string(what) + ": reversed hypothesis g <= comparison fails near y=" +
                                  std::to_string(y));
  }
}

}  // namespace detail

// Closed-form tail bounds below (or, reversed, above) the reconstructed
// tail, by regime of g at infinity:
//   gaussian   g >= 1            ->  K e^{-x^2/2} / x
//   power      g >= cdd y^2      ->  K A(z0) z0^{1/cdd} x^{-1-1/cdd}
//   stretched  g >= c1 y^p, p<2  ->  K A(z0) e^{(z0^{2-p}-x^{2-p})/((2-p)c1)} / x
// Lower bounds carry K = lower_bound_prefactor(c', E|X|) with
// c' = quadratic_cap(g, z0) (must be < 1); reversed cases use E|X|/2, since
// P[X>x] <= (E|X|/2) A(x)/x holds unconditionally.
inline TailBound lower_bound_menu(const GFunction& g, double mean_abs, double x,
                                  const TailBoundCase& cs, double tol = 1e-10) {
  if (!(mean_abs > 0.0)) throw std::invalid_argument("lower_bound_menu: mean_abs positive");
  const double nan = std::numeric_limits<double>::quiet_NaN();

  double z0 = cs.z0;
  if (!(z0 > 0.0)) {
    if (const auto* p = std::get_if<GPower>(&g.form))
      z0 = std::max(p->z0, 1.0 + 1e-6);
    else if (cs.regime == TailRegime::gaussian)
      z0 = std::max(1.0 + 1e-6, x * (1.0 - 1e-9));
    else
      z0 = 1.0 + 1e-6;
  }
  if (!(x > z0))
    throw std::invalid_argument("lower_bound_menu: bound only valid for x > z0 (z0 > 1)");

  const double probe_hi = std::max({1e6, 100.0 * x});
  double prefactor, value, cprime = nan;

  switch (cs.regime) {
    case TailRegime::gaussian: {
      detail::require_g_at_least(g, 1.0, 0.0, 1e-8, probe_hi, cs.reversed, "gaussian case");
      // the hypothesis is two-sided in y; probe the negative side as well
      for (double y = std::max(g.support_left + 1e-9, -50.0); y < 0.0; y += 0.25) {
        const double gy = g(y);
        if (!cs.reversed && gy < 1.0 - 1e-9)
          throw std::invalid_argument("gaussian case: hypothesis g >= 1 fails at negative y");
        if (cs.reversed && gy > 1.0 + 1e-9)
          throw std::invalid_argument("gaussian case: reversed hypothesis g <= 1 fails at negative y");
      }
      if (cs.reversed) {
        prefactor = 0.5 * mean_abs;
        value = prefactor * std::exp(-0.5 * x * x) / x;
      } else {
        cprime = quadratic_cap(g, z0);
        if (!(cprime < 1.0))
          throw std::invalid_argument("gaussian case: quadratic cap must be < 1 beyond z0");
        prefactor = lower_bound_prefactor(cprime, mean_abs).K;
        value = prefactor * std::exp(-0.5 * x * x) / x;
      }
      break;
    }
    case TailRegime::power: {
      if (!(cs.cdd > 0.0)) throw std::invalid_argument("power case: cdd must be positive");
      detail::require_g_at_least(g, cs.cdd, 2.0, z0, probe_hi, cs.reversed, "power case");
      const double a_z0 = decay_factor(g, z0, tol);
      if (cs.reversed) {
        prefactor = 0.5 * mean_abs;
        value = prefactor * a_z0 * std::pow(z0, 1.0 / cs.cdd) * std::pow(x, -1.0 - 1.0 / cs.cdd);
      } else {
        cprime = quadratic_cap(g, z0);
        if (!(cprime < 1.0))
          throw std::invalid_argument("power case: quadratic cap must be < 1 beyond z0");
        if (cs.cdd > cprime + 1e-12)
          throw std::invalid_argument("power case: cdd cannot exceed the quadratic cap");
        prefactor = lower_bound_prefactor(cprime, mean_abs).K;
        value = prefactor * a_z0 * std::pow(z0, 1.0 / cs.cdd) * std::pow(x, -1.0 - 1.0 / cs.cdd);
      }
      break;
    }
    case TailRegime::stretched: {
      if (!(cs.c1 > 0.0 && cs.p < 2.0))
        throw std::invalid_argument("stretched case: need c1 > 0 and p < 2");
      detail::require_g_at_least(g, cs.c1, cs.p, z0, probe_hi, cs.reversed, "stretched case");
      const double a_z0 = decay_factor(g, z0, tol);
      const double rate = ((std::pow(z0, 2.0 - cs.p) - std::pow(x, 2.0 - cs.p)) / ((2.0 - cs.p) * cs.c1));
      if (cs.reversed) {
        prefactor = 0.5 * mean_abs;
      } else {
        cprime = quadratic_cap(g, z0);
        if (!(cprime < 1.0))
          throw std::invalid_argument("stretched case: quadratic cap must be < 1 beyond z0");
        prefactor = lower_bound_prefactor(cprime, mean_abs).K;
      }
      value = prefactor * a_z0 * std::exp(rate) / x;
      break;
    }
    default:
      throw std::invalid_argument("lower_bound_menu: unknown regime");
  }
  return {value, prefactor, cprime, z0, cs.reversed};
}

// ((1+z^2) / (1+(2c'+1)z^2)) P[Z > z]: the tail keeps at least this share of
// the Gaussian tail whenever g <= c'(1+z^2)-type quadratic growth holds.
inline double stein_lower_bound(double z, double cprime) {
  if (!(z > 0.0)) throw std::invalid_argument("stein_lower_bound: z must be positive");
  if (!(cprime > 0.0)) throw std::invalid_argument("stein_lower_bound: cprime must be positive");
  const double z2 = z * z;
  return (1.0 + z2) / (1.0 + (2.0 * cprime + 1.0) * z2) * normal_tail(z);
}

// Smallest admissible slope of Var per unit time in the two-sided variance
// sandwich: ((sqrt(1 + 2 sqrt(2 pi)) - 1)/pi)^2 = 0.21366...
inline double variance_lower_constant() {
  const double r = std::sqrt(1.0 + 2.0 * kSqrt2Pi) - 1.0;
  return r * r / (kPi * kPi);
}

struct TailEnvelopes {
  double upper_unit_g;         // (1 + 1/z^2) P[Z > z]   (conditional variance >= 1)
  double upper_unit_gradient;  // e^{-z^2/2}             (gradient norm <= 1)
  double supergauss_ratio;     // (c-2)/c                (share surviving a c-th moment cap)
};

inline TailEnvelopes tail_envelopes(double z, double c = 4.0) {
  if (!(z > 0.0)) throw std::invalid_argument("tail_envelopes: z must be positive");
  if (!(c > 2.0)) throw std::invalid_argument("tail_envelopes: c must exceed 2");
  return {(1.0 + 1.0 / (z * z)) * normal_tail(z), std::exp(-0.5 * z * z), (c - 2.0) / c};
}

struct TailInequalityCheck {
  double lhs;           // S(z)
  double rhs;           // normal_tail(z) - integral/(1+z^2)
  double integral;      // int_z^{zmax} 2 x S(x) dx (truncated)
  bool holds;           // lhs >= rhs
  double point2_bound;  // ((c-2)(1+z^2)/((c-2)+c z^2)) normal_tail(z), NaN without c
};

// Self-improvement inequality of the tail: S(z) >= normal_tail(z)
// - (1/(1+z^2)) int_z^inf 2x S(x) dx.  The integral is truncated at the last
// grid point; truncation shrinks the subtracted term, so the reported rhs is
// an upper bound for the true rhs and a pass is conservative.
inline TailInequalityCheck tail_inequality_check(const std::vector<double>& xs,
                                                 const std::vector<double>& tails, double z,
                                                 double c = 0.0) {
  const std::size_t n = xs.size();
  if (n < 2 || tails.size() != n)
    throw std::invalid_argument("tail_inequality_check: need >= 2 matching samples");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(xs[i] < xs[i + 1]))
      throw std::invalid_argument("tail_inequality_check: xs must be strictly increasing");
  if (!(z >= xs.front() && z <= xs.back()))
    throw std::invalid_argument("tail_inequality_check: z outside the sampled range");

  const double sz = detail::interp_linear(xs, tails, z);
  // trapezoid of 2 x S(x) from z to the end of the grid
  double integral = 0.0;
  double prev_x = z, prev_v = 2.0 * z * sz;
  for (std::size_t i = 0; i < n; ++i) {
    if (xs[i] <= z) continue;
    const double v = 2.0 * xs[i] * tails[i];
    integral += 0.5 * (prev_v + v) * (xs[i] - prev_x);
    prev_x = xs[i];
    prev_v = v;
  }
  const double rhs = normal_tail(z) - integral / (1.0 + z * z);
  double point2 = std::numeric_limits<double>::quiet_NaN();
  if (c > 2.0)
    point2 = (c - 2.0) * (1.0 + z * z) / ((c - 2.0) + c * z * z) * normal_tail(z);
  return {sz, rhs, integral, sz >= rhs, point2};
}

}  // namespace mst
