#pragma once

// polymer.hpp -- directed lattice polymer in a white-in-time correlated
// Gaussian environment: partition function estimation, variance growth and
// its two-sided linear bounds, fluctuation-exponent fit, tail envelopes,
// replica overlap, and the rotation-based pairing estimate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mst/covariance.hpp"
#include "mst/quadrature.hpp"
#include "mst/stats.hpp"
#include "mst/tail_engine.hpp"

namespace mst {

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class HamiltonianKind { Linear, NonlinearAbs };

// Full site history of n_b independent lazy symmetric walks on Z/pZ
// (stay 1/2, left 1/4, right 1/4; per-step displacement variance 1/2).
struct PathEnsemble {
  int p = 0;
  int n_b = 0;
  int n_t = 0;
  std::vector<std::uint8_t> sites;  // row-major n_b x n_t, position during step k

  std::uint8_t at(int j, int k) const { return sites[static_cast<std::size_t>(j) * n_t + k]; }
};

// Walks start at site 0; each step consumes exactly two RNG bits
// (00/01 stay, 10 left, 11 right).
inline PathEnsemble sample_paths(int p, int n_t, int n_b, RngStream& rng) {
  if (p < 2 || p > 255) throw std::invalid_argument("sample_paths: need 2 <= p <= 255");
  if (n_t < 1 || n_b < 1) throw std::invalid_argument("sample_paths: need n_t, n_b >= 1");
  PathEnsemble e;
  e.p = p;
  e.n_b = n_b;
  e.n_t = n_t;
  e.sites.resize(static_cast<std::size_t>(n_b) * n_t);
  std::uint64_t buf = 0;
  int left = 0;
  for (int j = 0; j < n_b; ++j) {
    int s = 0;
    std::uint8_t* row = e.sites.data() + static_cast<std::size_t>(j) * n_t;
    for (int k = 0; k < n_t; ++k) {
      row[k] = static_cast<std::uint8_t>(s);  // position occupied during step k
      if (left == 0) {
        buf = rng.raw();
        left = 32;
      }
      const unsigned bits = static_cast<unsigned>(buf & 3u);
      buf >>= 2;
      --left;
      if (bits == 2u)
        s = (s == 0) ? p - 1 : s - 1;
      else if (bits == 3u)
        s = (s == p - 1) ? 0 : s + 1;
    }
  }
  return e;
}

// Accumulated field along one path: X = sum_k dW[k][site_k].
inline double path_energy(const EnvironmentSlab& slab, const PathEnsemble& paths, int j) {
  if (slab.p != paths.p || slab.n_t != paths.n_t)
    throw std::invalid_argument("path_energy: environment and paths disagree on shape");
  double h = 0.0;
  const std::uint8_t* row = paths.sites.data() + static_cast<std::size_t>(j) * paths.n_t;
  for (int k = 0; k < paths.n_t; ++k) h += slab.at(k, row[k]);
  return h;
}

// Energy fed to the Gibbs weight: identity, or the superlinear distortion
// x + x|x|/t which stays o(x) only on scales below t.
inline double hamiltonian_value(HamiltonianKind kind, double x, double t) {
  if (kind == HamiltonianKind::Linear) return x;
  return x + x * std::fabs(x) / t;
}

inline double hamiltonian(const EnvironmentSlab& slab, const PathEnsemble& paths, int j,
                          HamiltonianKind kind) {
  return hamiltonian_value(kind, path_energy(slab, paths, j), slab.n_t * slab.dt);
}

struct PartitionEstimate {
  double u_hat;      // may overflow to +inf for extreme fields; log_u is the contract
  double log_u;      // log of the path average of exp(H), log-sum-exp stabilized
  double se_log;     // delta-method standard error of log_u
  double bias_jack;  // first-order jackknife bias estimate of log_u
  int n_b;
};

// Log-average of exp(energies) with delta-method error and jackknife bias;
// `energies` are the per-path Hamiltonian values.
inline PartitionEstimate partition_function(const std::vector<double>& energies) {
  const std::size_t n = energies.size();
  if (n < 2) throw std::invalid_argument("partition_function: need >= 2 paths");
  const double m = *std::max_element(energies.begin(), energies.end());
  if (!std::isfinite(m)) throw std::domain_error("partition_function: degenerate energies");
  double s = 0.0, s2 = 0.0;
  for (double h : energies) {
    const double e = std::exp(h - m);
    s += e;
    s2 += e * e;
  }
  const double nd = static_cast<double>(n);
  const double mean = s / nd;
  const double log_u = std::log(mean) + m;
  const double var = std::max(0.0, s2 / nd - mean * mean) * nd / (nd - 1.0);
  const double se_log = std::sqrt(var / nd) / mean;
  double loo_sum = 0.0;
  for (double h : energies) loo_sum += std::log((s - std::exp(h - m)) / (nd - 1.0));
  const double bias = (nd - 1.0) * (loo_sum / nd + m - log_u);
  PartitionEstimate out;
  out.u_hat = std::exp(log_u);
  out.log_u = log_u;
  out.se_log = se_log;
  out.bias_jack = bias;
  out.n_b = static_cast<int>(n);
  return out;
}

struct PolymerConfig {
  CovarianceSpec cov;
  std::vector<double> t_grid;
  double dt = 0.25;
  int n_env = 100;
  int n_b = 500;
  HamiltonianKind kind = HamiltonianKind::Linear;
  std::uint64_t seed = 1;
  double budget = 2e9;  // cap on n_env * n_b * max(n_t) walk steps
  int threads = 1;
};

struct PolymerRun {
  PolymerConfig config;
  double q0 = 0.0, qm = 0.0;
  std::vector<double> t;
  std::vector<int> n_t;
  std::vector<std::vector<double>> log_u;      // [t][env]
  std::vector<std::vector<double>> bias_jack;  // [t][env]
  std::vector<std::string> warnings;
};

namespace detail {
inline int steps_for(double t, double dt) {
  const double r = t / dt;
  const int n = static_cast<int>(std::llround(r));
  if (n < 1 || std::fabs(r - n) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument("t_grid entries must be positive multiples of dt");
  return n;
}
}  // namespace detail

// Runs n_env independent environments; within one environment every t shares
// the same field and path realization (prefix sums of the energy), so the
// t-profile is internally consistent.  Deterministic given (seed, params):
// each environment draws from its own (seed, role, index) streams, so the
// thread count cannot change any output.
inline PolymerRun run_polymer(const PolymerConfig& config) {
  if (config.n_env < 2) throw std::invalid_argument("run_polymer: need n_env >= 2");
  if (config.n_b < 2) throw std::invalid_argument("run_polymer: need n_b >= 2");
  if (config.t_grid.empty()) throw std::invalid_argument("run_polymer: empty t_grid");
  for (std::size_t i = 0; i + 1 < config.t_grid.size(); ++i)
    if (!(config.t_grid[i] < config.t_grid[i + 1]))
      throw std::invalid_argument("run_polymer: t_grid must be strictly increasing");

  PolymerRun run;
  run.config = config;
  const CovarianceModel model = build_covariance(config.cov);
  run.q0 = model.q0;
  run.qm = model.qm;
  run.t = config.t_grid;
  for (double t : config.t_grid) run.n_t.push_back(detail::steps_for(t, config.dt));
  const int n_t_max = run.n_t.back();

  const double steps = static_cast<double>(config.n_env) * config.n_b * n_t_max;
  if (steps > config.budget)
    throw BudgetError("run_polymer: " + std::to_string(steps) + " walk steps exceed budget " +
                      std::to_string(config.budget));

  if (config.kind == HamiltonianKind::NonlinearAbs && !(run.q0 < 1.0 / 9.0))
    run.warnings.push_back("superlinear Hamiltonian with max covariance " +
                           std::to_string(run.q0) +
                           " >= 1/9: the linear variance upper bound is not guaranteed");
  if (run.q0 == 0.0) run.warnings.push_back("degenerate: zero covariance, log u identically 0");

  const std::size_t n_tpts = run.t.size();
  run.log_u.assign(n_tpts, std::vector<double>(config.n_env));
  run.bias_jack.assign(n_tpts, std::vector<double>(config.n_env));

  auto run_env = [&](int e) {
    RngStream env_rng(config.seed, "env", static_cast<std::uint64_t>(e));
    RngStream path_rng(config.seed, "paths", static_cast<std::uint64_t>(e));
    const EnvironmentSlab slab = sample_environment(model, n_t_max, config.dt, env_rng);
    const PathEnsemble paths = sample_paths(model.spec.p, n_t_max, config.n_b, path_rng);
    std::vector<double> x(config.n_b, 0.0), energies(config.n_b);
    std::size_t ti = 0;
    for (int k = 0; k < n_t_max && ti < n_tpts; ++k) {
      const double* rowk = slab.dw.data() + static_cast<std::size_t>(k) * slab.p;
      for (int j = 0; j < config.n_b; ++j) x[j] += rowk[paths.at(j, k)];
      if (k + 1 == run.n_t[ti]) {
        for (int j = 0; j < config.n_b; ++j)
          energies[j] = hamiltonian_value(config.kind, x[j], run.t[ti]);
        const PartitionEstimate pe = partition_function(energies);
        run.log_u[ti][e] = pe.log_u;
        run.bias_jack[ti][e] = pe.bias_jack;
        ++ti;
      }
    }
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int e = 0; e < config.n_env; ++e) run_env(e);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    const int grain = (config.n_env + threads - 1) / threads;
    for (int w = 0; w < threads && static_cast<int>(next) < config.n_env; ++w) {
      const int lo = static_cast<int>(next), hi = std::min(config.n_env, lo + grain);
      next = static_cast<std::size_t>(hi);
      pool.emplace_back([&, lo, hi] {
        for (int e = lo; e < hi; ++e) run_env(e);
      });
    }
    for (auto& th : pool) th.join();
  }
  return run;
}

struct VarianceRow {
  double t;
  std::size_t n_env;
  double var;
  double var_se;
  double mean;
  double mean_se;
  double bias;  // environment-mean of the per-environment jackknife bias
};

inline std::vector<VarianceRow> variance_vs_t(const PolymerRun& run) {
  std::vector<VarianceRow> rows;
  for (std::size_t ti = 0; ti < run.t.size(); ++ti) {
    const VarianceEstimate ve = sample_variance(run.log_u[ti]);
    const MeanEstimate me = mean_with_se(run.log_u[ti]);
    rows.push_back({run.t[ti], ve.n, ve.value, ve.se, me.value, me.se,
                    mean_of(run.bias_jack[ti])});
  }
  return rows;
}

struct ExponentFit {
  double chi;
  double chi_se;
  double r2;
  PowerLawFit fit;          // slope = 2 chi in log var vs log t
  std::vector<double> used_t;
  std::vector<double> dropped_t;  // excluded by the estimator-bias gate
  std::vector<std::string> warnings;
};

// Weighted log-log fit of variance against t; chi is half the slope.  Rows
// whose partition-estimator bias exceeds 10% of the variance are excluded,
// since there the measured spread is no longer about the ideal path average.
inline ExponentFit fit_fluctuation_exponent(const std::vector<VarianceRow>& rows) {
  std::vector<double> ts, vars, ws;
  ExponentFit out;
  for (const VarianceRow& r : rows) {
    if (std::fabs(r.bias) > 0.1 * r.var) {
      out.dropped_t.push_back(r.t);
      continue;
    }
    ts.push_back(r.t);
    vars.push_back(r.var);
    // precision weight for log(var): Var[log var] ~ (var_se/var)^2
    const double rel = r.var_se / r.var;
    ws.push_back(1.0 / (rel * rel));
    out.used_t.push_back(r.t);
  }
  if (ts.size() < 3)
    throw std::domain_error("fit_fluctuation_exponent: fewer than 3 usable t values");
  if (!(ts.back() / ts.front() >= 10.0))
    out.warnings.push_back("usable t range spans less than a decade; exponent is extrapolated");
  out.fit = loglog_fit(ts, vars, ws);
  out.chi = 0.5 * out.fit.slope;
  out.chi_se = 0.5 * out.fit.slope_se;
  out.r2 = out.fit.r2;
  return out;
}

struct BoundRow {
  double t;
  double var;
  double var_se;
  double lower;  // K_u qm t
  double upper;  // (pi/2)^2 q0 t, or 2 * 2^8 (pi/2)^2 q0^3 t superlinear
  bool violation;
};

// Linear-in-t variance bracket.  Violation means the 4-se band around the
// measured variance lies entirely outside the bracket; violations are
// reported, never thrown.
inline std::vector<BoundRow> check_variance_bounds(const PolymerRun& run,
                                                   const std::vector<VarianceRow>& rows) {
  const double pi_2 = 0.5 * 3.141592653589793238462643383279;
  const double ku = variance_lower_constant();
  std::vector<BoundRow> out;
  for (const VarianceRow& r : rows) {
    const double lower = ku * run.qm * r.t;
    double upper = pi_2 * pi_2 * run.q0 * r.t;
    if (run.config.kind == HamiltonianKind::NonlinearAbs)
      // stated leading constant 2^8 (pi/2)^2 q0^3 with a factor-2 slack for
      // the unquantified o(t) remainder
      upper = 2.0 * 256.0 * pi_2 * pi_2 * run.q0 * run.q0 * run.q0 * r.t;
    const bool viol = (r.var + 4.0 * r.var_se < lower) || (r.var - 4.0 * r.var_se > upper);
    out.push_back({r.t, r.var, r.var_se, lower, upper, viol});
  }
  return out;
}

struct TailCheckRow {
  double a;
  double empirical;  // P[|log u - mean| > a sqrt(t)] across environments
  double dkw_lo, dkw_hi;
  double ld_upper;         // 1 ^ (2 sqrt(q0) / (a sqrt(2pi))) exp(-a^2/(2 q0))
  double ld2_lower;        // 0.9 sqrt(qm) / (a sqrt(2pi)) exp(-a^2/(2 qm))
  bool upper_violation;    // dkw_lo > ld_upper
  bool lower_applicable;   // large-a regime where the lower envelope is claimed
  bool lower_violation;    // applicable and dkw_hi < ld2_lower
};

inline std::vector<TailCheckRow> empirical_tail_check(const PolymerRun& run, std::size_t t_index,
                                                      const std::vector<double>& a_grid) {
  if (t_index >= run.t.size()) throw std::invalid_argument("empirical_tail_check: bad t index");
  const std::vector<double>& lu = run.log_u[t_index];
  const double t = run.t[t_index];
  const double m = mean_of(lu);
  std::vector<double> dev(lu.size());
  for (std::size_t i = 0; i < lu.size(); ++i) dev[i] = std::fabs(lu[i] - m);
  std::sort(dev.begin(), dev.end());
  const double hw = dkw_halfwidth(0.99, dev.size());
  const double sqrt2pi = 2.506628274631000502415765284811;
  std::vector<TailCheckRow> out;
  for (double a : a_grid) {
    if (!(a > 0.0)) throw std::invalid_argument("empirical_tail_check: a grid must be positive");
    TailCheckRow row;
    row.a = a;
    row.empirical = empirical_tail(dev, a * std::sqrt(t));
    row.dkw_lo = std::max(0.0, row.empirical - hw);
    row.dkw_hi = std::min(1.0, row.empirical + hw);
    row.ld_upper =
        std::min(1.0, 2.0 * std::sqrt(run.q0) / (a * sqrt2pi) * std::exp(-0.5 * a * a / run.q0));
    row.ld2_lower = run.qm > 0.0
                        ? 0.9 * std::sqrt(run.qm) / (a * sqrt2pi) * std::exp(-0.5 * a * a / run.qm)
                        : 0.0;
    row.upper_violation = row.dkw_lo > row.ld_upper;
    // the lower envelope is asymptotic; flag it only where the normal-tail
    // approximation it rests on is within its claimed constant
    row.lower_applicable = run.qm > 0.0 && a / std::sqrt(run.qm) >= std::sqrt(10.0);
    row.lower_violation = row.lower_applicable && row.dkw_hi < row.ld2_lower;
    out.push_back(row);
  }
  return out;
}

// Gibbs-weighted pair average of the covariance along two independent
// replicas in one environment: (1/t) sum_k m_k^T Q m_k with m_k the
// weighted occupation measure at step k.  Always lands in [qm, q0].
inline double replica_overlap(const CovarianceModel& model, const EnvironmentSlab& slab,
                              const PathEnsemble& paths, HamiltonianKind kind) {
  if (paths.n_b < 2) throw std::invalid_argument("replica_overlap: need >= 2 paths");
  const double t = slab.n_t * slab.dt;
  std::vector<double> energies(paths.n_b);
  for (int j = 0; j < paths.n_b; ++j)
    energies[j] = hamiltonian_value(kind, path_energy(slab, paths, j), t);
  const double mx = *std::max_element(energies.begin(), energies.end());
  double z = 0.0;
  std::vector<double> w(paths.n_b);
  for (int j = 0; j < paths.n_b; ++j) z += (w[j] = std::exp(energies[j] - mx));
  for (double& v : w) v /= z;

  const int p = slab.p;
  Eigen::VectorXd m(p), qm_vec(p);
  double acc = 0.0;
  for (int k = 0; k < slab.n_t; ++k) {
    m.setZero();
    for (int j = 0; j < paths.n_b; ++j) m[paths.at(j, k)] += w[j];
    qm_vec.noalias() = model.q * m;
    acc += m.dot(qm_vec);
  }
  return acc * slab.dt / t;
}

struct PairingEstimate {
  double estimate;  // environment-mean of the rotation-averaged pairing
  double se;
  double overlap_mean;  // same environments' replica overlap
  double overlap_se;
  std::vector<double> per_env;
  std::vector<double> per_env_overlap;
};

// Rotation-based estimate of the pairing (1/2t) int |sin r| dr E' E_{b,bbar}
// [ int_0^t Q(b_s, bbar_s) ds * (Gibbs weight at W) * (Gibbs weight at the
// rotated field W cos r + W' sin r) ], per-environment, with Gauss-Legendre
// quadrature on each half-interval and n_prime fresh W' fields per
// environment.  For the superlinear Hamiltonian the two (1 + |X|/t) factors
// enter the weights unnormalized.
inline PairingEstimate estimate_gamma_g_polymer(const CovarianceSpec& cov, double t, int n_env,
                                                int n_prime, int theta_nodes, int n_b, double dt,
                                                std::uint64_t seed,
                                                HamiltonianKind kind = HamiltonianKind::Linear) {
  if (n_env < 2) throw std::invalid_argument("estimate_gamma_g_polymer: need n_env >= 2");
  if (n_prime < 8) throw std::invalid_argument("estimate_gamma_g_polymer: need >= 8 prime fields");
  if (theta_nodes < 16)
    throw std::invalid_argument("estimate_gamma_g_polymer: need >= 16 quadrature nodes per half");
  const CovarianceModel model = build_covariance(cov);
  const int n_t = detail::steps_for(t, dt);
  const double steps =
      static_cast<double>(n_env) * (1 + n_prime) * static_cast<double>(n_b) * n_t;
  if (steps > 2e9)
    throw BudgetError("estimate_gamma_g_polymer: field-energy budget exceeded");

  const GaussLegendre rule = gauss_legendre(theta_nodes);
  const double pi_2 = 0.5 * 3.141592653589793238462643383279;
  struct ThetaNode {
    double cos_t, sin_t, factor;
  };
  std::vector<ThetaNode> thetas;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double theta = 0.5 * pi_2 * (rule.nodes[q] + 1.0);
    const double gw = 0.5 * pi_2 * rule.weights[q];
    thetas.push_back({std::cos(theta), std::sin(theta), 0.5 * gw * std::sin(theta)});
    thetas.push_back({std::cos(theta), -std::sin(theta), 0.5 * gw * std::sin(theta)});
  }

  PairingEstimate out;
  const int p = model.spec.p;
  std::vector<double> x_w(n_b), score(n_b), w(n_b), x_rot(n_b), v(n_b);
  std::vector<std::vector<double>> x_prime(n_prime, std::vector<double>(n_b));
  Eigen::VectorXd occ(p), c(p);
  for (int e = 0; e < n_env; ++e) {
    RngStream env_rng(seed, "gee-env", static_cast<std::uint64_t>(e));
    RngStream path_rng(seed, "gee-paths", static_cast<std::uint64_t>(e));
    const EnvironmentSlab slab = sample_environment(model, n_t, dt, env_rng);
    const PathEnsemble paths = sample_paths(p, n_t, n_b, path_rng);
    for (int j = 0; j < n_b; ++j) x_w[j] = path_energy(slab, paths, j);
    for (int r = 0; r < n_prime; ++r) {
      RngStream prime_rng(seed, "gee-prime",
                          static_cast<std::uint64_t>(e) * static_cast<std::uint64_t>(n_prime) + r);
      const EnvironmentSlab slab_p = sample_environment(model, n_t, dt, prime_rng);
      for (int j = 0; j < n_b; ++j) x_prime[r][j] = path_energy(slab_p, paths, j);
    }

    // Gibbs weights under W, including the superlinear derivative factors
    double mx = -1e300;
    for (int j = 0; j < n_b; ++j) mx = std::max(mx, hamiltonian_value(kind, x_w[j], t));
    double z = 0.0;
    for (int j = 0; j < n_b; ++j) z += std::exp(hamiltonian_value(kind, x_w[j], t) - mx);
    for (int j = 0; j < n_b; ++j) {
      w[j] = std::exp(hamiltonian_value(kind, x_w[j], t) - mx) / z;
      if (kind == HamiltonianKind::NonlinearAbs) w[j] *= 1.0 + std::fabs(x_w[j]) / t;
    }

    // score_j = sum_k (Q m_k)[site_j(k)] collapses the pair average so each
    // rotated reweighting below is O(n_b)
    std::fill(score.begin(), score.end(), 0.0);
    double overlap = 0.0;
    for (int k = 0; k < n_t; ++k) {
      occ.setZero();
      for (int j = 0; j < n_b; ++j) occ[paths.at(j, k)] += w[j];
      c.noalias() = model.q * occ;
      for (int j = 0; j < n_b; ++j) score[j] += c[paths.at(j, k)];
    }
    for (int j = 0; j < n_b; ++j) overlap += w[j] * score[j];
    overlap *= dt / t;
    out.per_env_overlap.push_back(overlap);

    double gee = 0.0;
    for (const ThetaNode& nd : thetas) {
      for (int j = 0; j < n_b; ++j) x_rot[j] = nd.cos_t * x_w[j];
      double mean_t = 0.0;
      for (int r = 0; r < n_prime; ++r) {
        double mr = -1e300;
        for (int j = 0; j < n_b; ++j) {
          const double xr = x_rot[j] + nd.sin_t * x_prime[r][j];
          v[j] = hamiltonian_value(kind, xr, t);
          mr = std::max(mr, v[j]);
        }
        double zr = 0.0;
        for (int j = 0; j < n_b; ++j) zr += std::exp(v[j] - mr);
        double term = 0.0;
        for (int j = 0; j < n_b; ++j) {
          double vw = std::exp(v[j] - mr) / zr;
          if (kind == HamiltonianKind::NonlinearAbs)
            vw *= 1.0 + std::fabs(x_rot[j] + nd.sin_t * x_prime[r][j]) / t;
          term += vw * score[j];
        }
        mean_t += term * dt / t;
      }
      gee += nd.factor * mean_t / n_prime;
    }
    out.per_env.push_back(gee);
  }

  const MeanEstimate ge = mean_with_se(out.per_env);
  const MeanEstimate ov = mean_with_se(out.per_env_overlap);
  out.estimate = ge.value;
  out.se = ge.se;
  out.overlap_mean = ov.value;
  out.overlap_se = ov.se;
  return out;
}

}  // namespace mst
