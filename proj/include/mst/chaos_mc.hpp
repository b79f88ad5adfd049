#pragma once

// chaos_mc.hpp -- Monte Carlo instruments over the exact chaos calculus:
// integration-by-parts checks, the rotation (smart-path) representation of
// -DL^{-1}, conditional-variance profile estimation by binning, and the
// bounded-gradient concentration check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mst/chaos.hpp"
#include "mst/gfunction.hpp"
#include "mst/quadrature.hpp"
#include "mst/stats.hpp"

namespace mst {

inline std::vector<double> sample_gaussian_point(int dim, RngStream& rng) {
  std::vector<double> w(static_cast<std::size_t>(dim));
  rng.fill_normal(w.data(), w.size());
  return w;
}

struct PairingCheck {
  double lhs, rhs;
  double diff;  // lhs - rhs
  double se;    // standard error of diff
  std::size_t n;
  std::uint64_t seed;
  bool pass;  // |diff| <= 4 se
};

// Checks E[X h(X)] = E[h'(X) G] by common-sample Monte Carlo.  h must have a
// bounded derivative; a sampling guard rejects h' values beyond 1e6.
inline PairingCheck verify_identity_key(const ChaosRV& x, const std::function<double(double)>& h,
                                        const std::function<double(double)>& hprime,
                                        std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("verify_identity_key: need n >= 2");
  const ChaosRV g = gamma_g(x);
  RngStream rng(seed, "identity-key");
  double s_l = 0.0, s_r = 0.0, s_d = 0.0, s_d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = sample_gaussian_point(x.dim, rng);
    const double xv = eval_chaos(x, w);
    const double gv = eval_chaos(g, w);
    const double hp = hprime(xv);
    if (std::fabs(hp) > 1e6)
      throw std::domain_error("verify_identity_key: test function derivative not bounded (guard at 1e6)");
    const double l = xv * h(xv), r = hp * gv, d = l - r;
    s_l += l;
    s_r += r;
    s_d += d;
    s_d2 += d * d;
  }
  const double nd = static_cast<double>(n);
  const double md = s_d / nd;
  const double var = std::max(0.0, s_d2 / nd - md * md) * nd / (nd - 1.0);
  const double se = std::sqrt(var / nd);
  return {s_l / nd, s_r / nd, md, se, n, seed, std::fabs(md) <= 4.0 * se};
}

struct ProjectionCheck {
  double exact_lhs, exact_rhs;  // coefficient arithmetic, equal in exact math
  PairingCheck mc;
};

// E[F Y] = (1/n) E[<DF, DY>] for F living in a single chaos order n: exact
// by orthogonality, re-checked by Monte Carlo.
inline ProjectionCheck verify_projection_identity(const ChaosRV& f, const ChaosRV& y,
                                                  std::size_t n_mc, std::uint64_t seed) {
  if (f.dim != y.dim) throw std::invalid_argument("verify_projection_identity: dimension mismatch");
  std::uint32_t order = 0;
  bool first = true;
  for (const auto& [a, c] : f.terms) {
    const std::uint32_t o = order_of(a);
    if (o == 0) throw std::invalid_argument("verify_projection_identity: F must be centered");
    if (first) {
      order = o;
      first = false;
    } else if (o != order) {
      throw std::invalid_argument("verify_projection_identity: F must live in a single chaos order");
    }
  }
  if (first) throw std::invalid_argument("verify_projection_identity: F is zero");

  const auto df = malliavin_derivative(f);
  const auto dy = malliavin_derivative(y);
  double exact_rhs = 0.0;
  for (int i = 0; i < f.dim; ++i) exact_rhs += chaos_inner(df[i], dy[i]);
  exact_rhs /= static_cast<double>(order);
  const double exact_lhs = chaos_inner(f, y);

  RngStream rng(seed, "projection-identity");
  double s_l = 0.0, s_r = 0.0, s_d = 0.0, s_d2 = 0.0;
  for (std::size_t k = 0; k < n_mc; ++k) {
    const auto w = sample_gaussian_point(f.dim, rng);
    const double l = eval_chaos(f, w) * eval_chaos(y, w);
    double r = 0.0;
    for (int i = 0; i < f.dim; ++i) r += eval_chaos(df[i], w) * eval_chaos(dy[i], w);
    r /= static_cast<double>(order);
    const double d = l - r;
    s_l += l;
    s_r += r;
    s_d += d;
    s_d2 += d * d;
  }
  const double nd = static_cast<double>(n_mc);
  const double md = s_d / nd;
  const double var = std::max(0.0, s_d2 / nd - md * md) * nd / (nd - 1.0);
  const double se = std::sqrt(var / nd);
  return {exact_lhs, exact_rhs,
          {s_l / nd, s_r / nd, md, se, n_mc, seed, std::fabs(md) <= 4.0 * se}};
}

// (1/2) int_{-pi/2}^{pi/2} sgn(t) sin(t) cos^n(t) dt under the same
// half-interval Gauss-Legendre discretization used below; equals 1/(n+1).
inline double theta_weight_integral(int n, int nodes_per_half) {
  const GaussLegendre rule = gauss_legendre(nodes_per_half);
  const double pi_2 = 0.5 * 3.141592653589793238462643383279;
  double s = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double theta = 0.5 * pi_2 * (rule.nodes[q] + 1.0);  // map to (0, pi/2)
    const double w = 0.5 * pi_2 * rule.weights[q];
    // the two half-intervals contribute identically: sgn * sin is even
    s += 2.0 * w * 0.5 * std::sin(theta) * std::pow(std::cos(theta), n);
  }
  return s;
}

struct MehlerEstimate {
  std::vector<double> value;  // per-component estimate of -D(L^{-1}X) at w
  std::vector<double> se;
  std::vector<double> exact;  // derivative of inverse_ou(X) at w, exact route
  int nodes_per_half;
  std::size_t n_mc;
};

// Rotation representation: -D_s L^{-1} X = (1/2) int sgn(t) E'[D'_s X(w cos t
// + W' sin t)] dt, estimated with fresh W' copies and Gauss-Legendre in t on
// each half-interval, then compared against the exact coefficient route.
inline MehlerEstimate mehler_minus_dl_inverse(const ChaosRV& x, const std::vector<double>& w,
                                              int nodes_per_half, std::size_t n_mc,
                                              std::uint64_t seed) {
  if (static_cast<int>(w.size()) != x.dim)
    throw std::invalid_argument("mehler_minus_dl_inverse: point dimension mismatch");
  if (n_mc < 2) throw std::invalid_argument("mehler_minus_dl_inverse: need n_mc >= 2");
  ChaosRV centered = x;
  centered.terms.erase(MultiIndex(static_cast<std::size_t>(x.dim), 0));

  const auto dx = malliavin_derivative(centered);
  const auto exact_rv = malliavin_derivative(inverse_ou(centered));

  const GaussLegendre rule = gauss_legendre(nodes_per_half);
  const double pi_2 = 0.5 * 3.141592653589793238462643383279;
  struct Node {
    double cos_t, sin_t, factor;
  };
  std::vector<Node> nodes;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double theta = 0.5 * pi_2 * (rule.nodes[q] + 1.0);
    const double gw = 0.5 * pi_2 * rule.weights[q];
    // D'_s of the rotated variable contributes sin(t) D_s X at the rotated
    // point; together with the (1/2) sgn(t) kernel both halves carry weight
    // (1/2) gw sin(t) but rotate W' with opposite signs
    nodes.push_back({std::cos(theta), std::sin(theta), 0.5 * gw * std::sin(theta)});
    nodes.push_back({std::cos(theta), -std::sin(theta), 0.5 * gw * std::sin(theta)});
  }

  const std::size_t d = static_cast<std::size_t>(x.dim);
  std::vector<double> sum(d, 0.0), sum2(d, 0.0);
  RngStream rng(seed, "rotation-mc");
  std::vector<double> wprime(d), rotated(d), contrib(d);
  for (std::size_t r = 0; r < n_mc; ++r) {
    rng.fill_normal(wprime.data(), d);
    std::fill(contrib.begin(), contrib.end(), 0.0);
    for (const Node& nd : nodes) {
      for (std::size_t s = 0; s < d; ++s) rotated[s] = w[s] * nd.cos_t + wprime[s] * nd.sin_t;
      for (std::size_t s = 0; s < d; ++s) contrib[s] += nd.factor * eval_chaos(dx[s], rotated);
    }
    for (std::size_t s = 0; s < d; ++s) {
      sum[s] += contrib[s];
      sum2[s] += contrib[s] * contrib[s];
    }
  }

  MehlerEstimate out;
  out.nodes_per_half = nodes_per_half;
  out.n_mc = n_mc;
  out.value.resize(d);
  out.se.resize(d);
  out.exact.resize(d);
  const double nd = static_cast<double>(n_mc);
  for (std::size_t s = 0; s < d; ++s) {
    const double m = sum[s] / nd;
    const double var = std::max(0.0, sum2[s] / nd - m * m) * nd / (nd - 1.0);
    out.value[s] = m;
    out.se[s] = std::sqrt(var / nd);
    out.exact[s] = eval_chaos(exact_rv[s], w);
  }
  return out;
}

struct GEstimate {
  GFunction g;  // tabulated profile with per-bin standard errors
  double mean_abs;
  double mean_abs_se;
  std::size_t n;
  int bins;
};

// Estimates z -> E[G | X = z] by equal-count binning of (X, G) samples;
// G is evaluated exactly, only the conditioning is Monte Carlo.
inline GEstimate estimate_g(const ChaosRV& x, std::size_t n, int bins, std::uint64_t seed) {
  if (bins < 2) throw std::invalid_argument("estimate_g: need >= 2 bins");
  if (n < static_cast<std::size_t>(4 * bins))
    throw std::invalid_argument("estimate_g: need at least 4 samples per bin");
  const ChaosRV g = gamma_g(x);
  RngStream rng(seed, "profile-binning");
  std::vector<std::pair<double, double>> xg(n);
  double s_abs = 0.0, s_abs2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = sample_gaussian_point(x.dim, rng);
    const double xv = eval_chaos(x, w);
    xg[i] = {xv, eval_chaos(g, w)};
    s_abs += std::fabs(xv);
    s_abs2 += xv * xv;
  }
  std::sort(xg.begin(), xg.end());

  std::vector<double> grid, values, ses;
  grid.reserve(bins);
  values.reserve(bins);
  ses.reserve(bins);
  const std::size_t base = n / static_cast<std::size_t>(bins);
  std::size_t extra = n % static_cast<std::size_t>(bins);
  std::size_t pos = 0;
  for (int b = 0; b < bins; ++b) {
    std::size_t cnt = base + (extra > 0 ? 1 : 0);
    if (extra > 0) --extra;
    double mx = 0.0, mg = 0.0, mg2 = 0.0;
    for (std::size_t i = pos; i < pos + cnt; ++i) {
      mx += xg[i].first;
      mg += xg[i].second;
      mg2 += xg[i].second * xg[i].second;
    }
    const double c = static_cast<double>(cnt);
    mx /= c;
    mg /= c;
    const double var = std::max(0.0, mg2 / c - mg * mg) * c / (c - 1.0);
    grid.push_back(mx);
    values.push_back(mg);
    ses.push_back(std::sqrt(var / c));
    pos += cnt;
  }
  for (std::size_t b = 0; b + 1 < grid.size(); ++b)
    if (!(grid[b] < grid[b + 1]))
      throw std::domain_error("estimate_g: bin centers not separated (X close to discrete)");
  for (double v : values)
    if (!(v > 0.0))
      throw std::domain_error("estimate_g: nonpositive bin mean; profile too noisy to tabulate");

  const double nd = static_cast<double>(n);
  const double m_abs = s_abs / nd;
  const double var_abs = std::max(0.0, s_abs2 / nd - m_abs * m_abs) * nd / (nd - 1.0);
  return {g_tabulated(std::move(grid), std::move(values), std::move(ses)), m_abs,
          std::sqrt(var_abs / nd), n, bins};
}

struct SubgaussianReport {
  double sigma;  // certified almost-sure bound on ||DX||
  std::vector<double> u, empirical, envelope;
  double dkw_half;
  std::vector<std::size_t> violations;  // indices with empirical - dkw > envelope
  std::size_t n;
};

// Certifies sup_w ||DX(w)|| and checks P[|X - EX| > u] <= 2 e^{-u^2/(2s^2)}
// against the empirical tail with a DKW(0.99) band.  A polynomial gradient
// norm is bounded iff ||DX||^2 is constant, so certification demands exactly
// that; anything else is rejected as unbounded.
inline SubgaussianReport subgaussian_check(const ChaosRV& x, const std::vector<double>& u_grid,
                                           std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("subgaussian_check: need n >= 2");
  const ChaosRV ndx = norm_dx_squared(x);
  const MultiIndex zero(static_cast<std::size_t>(x.dim), 0);
  double c0 = 0.0, spill = 0.0;
  for (const auto& [a, c] : ndx.terms) {
    if (a == zero)
      c0 = c;
    else
      spill = std::max(spill, std::fabs(c));
  }
  if (spill > 1e-12 * std::max(1.0, std::fabs(c0)))
    throw std::domain_error(
        "subgaussian_check: ||DX||^2 is a nonconstant polynomial, hence unbounded; "
        "no almost-sure gradient bound exists");
  const double sigma = std::sqrt(std::max(0.0, c0));
  const double mean = chaos_moments(x).mean;

  RngStream rng(seed, "subgaussian");
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i)
    dev[i] = std::fabs(eval_chaos(x, sample_gaussian_point(x.dim, rng)) - mean);
  std::sort(dev.begin(), dev.end());

  SubgaussianReport rep;
  rep.sigma = sigma;
  rep.n = n;
  rep.dkw_half = dkw_halfwidth(0.99, n);
  for (double u : u_grid) {
    if (!(u > 0.0)) throw std::invalid_argument("subgaussian_check: u grid must be positive");
    const double emp = empirical_tail(dev, u);
    const double env = 2.0 * std::exp(-0.5 * u * u / (sigma * sigma));
    rep.u.push_back(u);
    rep.empirical.push_back(emp);
    rep.envelope.push_back(env);
    if (emp - rep.dkw_half > env) rep.violations.push_back(rep.u.size() - 1);
  }
  return rep;
}

}  // namespace mst
