#pragma once

// chaos.hpp -- exact polynomial calculus in a finite-dimensional Gaussian
// space.  A random variable is a finite combination of products of
// probabilists' Hermite polynomials He_k in independent N(0,1) coordinates,
// stored as multi-index -> coefficient.  Derivatives, the inverse of the
// number operator, products (Hermite linearization with integer-exact
// structure constants), and second-moment bookkeeping are all exact.

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mst {

using MultiIndex = std::vector<std::uint32_t>;

inline std::uint32_t order_of(const MultiIndex& a) {
  std::uint32_t s = 0;
  for (auto v : a) s += v;
  return s;
}

struct ChaosRV {
  int dim = 0;
  std::map<MultiIndex, double> terms;  // absent index means coefficient 0
};

inline void chaos_add_term(ChaosRV& x, const MultiIndex& alpha, double coeff) {
  if (static_cast<int>(alpha.size()) != x.dim)
    throw std::invalid_argument("chaos_add_term: multi-index length must equal dim");
  const double c = (x.terms[alpha] += coeff);
  if (c == 0.0) x.terms.erase(alpha);
}

inline ChaosRV make_chaos(int dim, std::initializer_list<std::pair<MultiIndex, double>> init) {
  if (dim < 1) throw std::invalid_argument("make_chaos: dim must be >= 1");
  ChaosRV x{dim, {}};
  for (const auto& [a, c] : init) chaos_add_term(x, a, c);
  return x;
}

namespace detail {

inline double factorial_d(std::uint32_t n) {
  double f = 1.0;
  for (std::uint32_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return f;
}

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r))
    throw std::overflow_error("chaos: integer structure constant exceeded 64 bits");
  return r;
}

inline std::uint64_t binomial_u64(std::uint32_t n, std::uint32_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint32_t i = 1; i <= k; ++i) r = checked_mul(r, n - k + i) / i;
  return r;
}

// He_m He_n = sum_k k! C(m,k) C(n,k) He_{m+n-2k}; coefficients exact in u64
inline std::vector<std::pair<std::uint32_t, std::uint64_t>> hermite_product_1d(std::uint32_t m,
                                                                               std::uint32_t n) {
  std::vector<std::pair<std::uint32_t, std::uint64_t>> out;
  const std::uint32_t kmax = std::min(m, n);
  for (std::uint32_t k = 0; k <= kmax; ++k) {
    std::uint64_t c = binomial_u64(m, k);
    c = checked_mul(c, binomial_u64(n, k));
    for (std::uint32_t i = 2; i <= k; ++i) c = checked_mul(c, i);
    out.emplace_back(m + n - 2 * k, c);
  }
  return out;
}

}  // namespace detail

inline double eval_chaos(const ChaosRV& x, const std::vector<double>& w) {
  if (static_cast<int>(w.size()) != x.dim)
    throw std::invalid_argument("eval_chaos: point dimension mismatch");
  // per-coordinate Hermite ladders up to the largest degree present
  std::vector<std::uint32_t> maxdeg(static_cast<std::size_t>(x.dim), 0);
  for (const auto& [a, c] : x.terms)
    for (int i = 0; i < x.dim; ++i) maxdeg[i] = std::max(maxdeg[i], a[i]);
  std::vector<std::vector<double>> he(static_cast<std::size_t>(x.dim));
  for (int i = 0; i < x.dim; ++i) {
    auto& h = he[i];
    h.resize(maxdeg[i] + 1);
    h[0] = 1.0;
    if (maxdeg[i] >= 1) h[1] = w[i];
    for (std::uint32_t k = 2; k <= maxdeg[i]; ++k)
      h[k] = w[i] * h[k - 1] - static_cast<double>(k - 1) * h[k - 2];
  }
  double s = 0.0;
  for (const auto& [a, c] : x.terms) {
    double p = c;
    for (int i = 0; i < x.dim; ++i)
      if (a[i] > 0) p *= he[i][a[i]];
    s += p;
  }
  return s;
}

struct ChaosMoments {
  double mean;
  double variance;  // sum over nonzero orders of coeff^2 * prod(alpha_i!)
};

inline ChaosMoments chaos_moments(const ChaosRV& x) {
  ChaosMoments m{0.0, 0.0};
  for (const auto& [a, c] : x.terms) {
    if (order_of(a) == 0) {
      m.mean = c;
      continue;
    }
    double f = 1.0;
    for (auto v : a) f *= detail::factorial_d(v);
    m.variance += c * c * f;
  }
  return m;
}

// E[X Y] by orthogonality of the Hermite basis
inline double chaos_inner(const ChaosRV& x, const ChaosRV& y) {
  if (x.dim != y.dim) throw std::invalid_argument("chaos_inner: dimension mismatch");
  double s = 0.0;
  for (const auto& [a, c] : x.terms) {
    const auto it = y.terms.find(a);
    if (it == y.terms.end()) continue;
    double f = 1.0;
    for (auto v : a) f *= detail::factorial_d(v);
    s += c * it->second * f;
  }
  return s;
}

// component i of the derivative: d/dw_i He_k = k He_{k-1}
inline std::vector<ChaosRV> malliavin_derivative(const ChaosRV& x) {
  std::vector<ChaosRV> d(static_cast<std::size_t>(x.dim), ChaosRV{x.dim, {}});
  for (const auto& [a, c] : x.terms)
    for (int i = 0; i < x.dim; ++i) {
      if (a[i] == 0) continue;
      MultiIndex b = a;
      b[i] -= 1;
      chaos_add_term(d[i], b, c * static_cast<double>(a[i]));
    }
  return d;
}

// action of the inverse number operator: coefficient of order-n terms
// scaled by 1/n.  This is -L^{-1} on centered inputs.
inline ChaosRV inverse_ou(const ChaosRV& x) {
  ChaosRV y{x.dim, {}};
  for (const auto& [a, c] : x.terms) {
    const std::uint32_t n = order_of(a);
    if (n == 0) {
      if (c != 0.0)
        throw std::invalid_argument("inverse_ou: input must be centered (no constant term)");
      continue;
    }
    y.terms.emplace(a, c / static_cast<double>(n));
  }
  return y;
}

inline ChaosRV chaos_scale(const ChaosRV& x, double s) {
  ChaosRV y{x.dim, {}};
  if (s == 0.0) return y;
  for (const auto& [a, c] : x.terms) y.terms.emplace(a, c * s);
  return y;
}

inline ChaosRV chaos_sum(const ChaosRV& x, const ChaosRV& y) {
  if (x.dim != y.dim) throw std::invalid_argument("chaos_sum: dimension mismatch");
  ChaosRV z = x;
  for (const auto& [a, c] : y.terms) chaos_add_term(z, a, c);
  return z;
}

// exact product: per-coordinate Hermite linearization, integer structure
// constants checked against 64-bit and 2^53 (so their double image is exact)
inline ChaosRV chaos_multiply(const ChaosRV& x, const ChaosRV& y) {
  if (x.dim != y.dim) throw std::invalid_argument("chaos_multiply: dimension mismatch");
  ChaosRV z{x.dim, {}};
  for (const auto& [a, ca] : x.terms)
    for (const auto& [b, cb] : y.terms) {
      // tensor the per-coordinate expansions
      std::vector<std::pair<MultiIndex, std::uint64_t>> partial{{MultiIndex{}, 1}};
      for (int i = 0; i < x.dim; ++i) {
        const auto comp = detail::hermite_product_1d(a[i], b[i]);
        std::vector<std::pair<MultiIndex, std::uint64_t>> next;
        next.reserve(partial.size() * comp.size());
        for (const auto& [idx, ic] : partial)
          for (const auto& [deg, dc] : comp) {
            MultiIndex e = idx;
            e.push_back(deg);
            next.emplace_back(std::move(e), detail::checked_mul(ic, dc));
          }
        partial = std::move(next);
      }
      for (const auto& [idx, ic] : partial) {
        if (ic > (1ull << 53))
          throw std::overflow_error("chaos_multiply: structure constant not exactly representable");
        chaos_add_term(z, idx, ca * cb * static_cast<double>(ic));
      }
    }
  return z;
}

// G = <DX, D(-L^{-1} X)>: the random factor whose conditional expectation
// given X drives every tail reconstruction here
inline ChaosRV gamma_g(const ChaosRV& x) {
  ChaosRV centered = x;
  {
    MultiIndex zero(static_cast<std::size_t>(x.dim), 0);
    centered.terms.erase(zero);
  }
  const auto dx = malliavin_derivative(centered);
  const auto dl = malliavin_derivative(inverse_ou(centered));
  ChaosRV g{x.dim, {}};
  for (int i = 0; i < x.dim; ++i) g = chaos_sum(g, chaos_multiply(dx[i], dl[i]));
  return g;
}

inline ChaosRV norm_dx_squared(const ChaosRV& x) {
  const auto dx = malliavin_derivative(x);
  ChaosRV g{x.dim, {}};
  for (int i = 0; i < x.dim; ++i) g = chaos_sum(g, chaos_multiply(dx[i], dx[i]));
  return g;
}

}  // namespace mst
