#pragma once

// quadrature.hpp -- adaptive Simpson integration with an absolute tolerance
// and Gauss-Legendre rules.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mst {

namespace detail {

template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm))
    throw std::domain_error("adaptive_simpson: integrand not finite");
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) throw std::runtime_error("adaptive_simpson: did not converge (depth exhausted)");
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// integral of f over [a,b] to absolute tolerance tol; b < a integrates with
// the usual sign flip.  Throws if the integrand turns non-finite or the
// recursion cannot meet tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10, int max_depth = 52) {
  if (a == b) return 0.0;
  if (b < a) return -adaptive_simpson(std::forward<F>(f), b, a, tol, max_depth);
  if (!(tol > 0.0)) throw std::invalid_argument("adaptive_simpson: tol must be positive");
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb))
    throw std::domain_error("adaptive_simpson: integrand not finite");
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

struct GaussLegendre {
  std::vector<double> nodes;    // on (-1,1), ascending
  std::vector<double> weights;  // sum to 2
};

// n-point rule by Newton iteration on P_n from Chebyshev initial guesses.
inline GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussLegendre r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pi = 3.141592653589793238462643383279;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // evaluate P_n and P_n' by the three-term recurrence
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    r.nodes[n - 1 - i] = x;
    r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

// fixed-order Gauss-Legendre integral of f over [a,b]
template <class F>
double gauss_legendre_integrate(F&& f, double a, double b, const GaussLegendre& rule) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(c + h * rule.nodes[i]);
  return s * h;
}

}  // namespace mst
