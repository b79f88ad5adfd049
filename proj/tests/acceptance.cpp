// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Every tolerance is pinned here, not computed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mst/chaos_mc.hpp"
#include "mst/polymer.hpp"
#include "mst/report.hpp"
#include "mst/stein.hpp"
#include "mst/tail_engine.hpp"

using namespace mst;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  if (!pass) ++failures;
}

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

bool files_equal(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str();
}

// ---- 1: equation residual and derivative envelopes -------------------------

void criterion_1() {
  const double t0 = now_s();
  const std::vector<double> zs{-3.0, -1.0, 0.0, 1.0, 2.0, 3.0};
  double max_resid = 0.0, max_deriv = 0.0, quad_excess = 0.0;
  const int n = 10000;
  for (double z : zs) {
    for (int i = 0; i <= n; ++i) {
      const double x = -8.0 + 16.0 * i / n;
      max_resid = std::max(max_resid, std::fabs(stein_residual(z, x)));
      const double dl = std::fabs(stein_derivative_left(z, x));
      const double dr = std::fabs(stein_derivative_right(z, x));
      max_deriv = std::max({max_deriv, dl, dr});
      if (z > 0.0 && x > z)
        quad_excess = std::max(quad_excess, std::max(dl, dr) - 1.0 / (1.0 + x * x));
    }
  }
  const double dt = now_s() - t0;
  const bool pass =
      max_resid < 1e-10 && max_deriv <= 1.0 + 1e-12 && quad_excess <= 1e-12 && dt < 5.0;
  report(1, pass,
         fmt("residual<1e-10 and |f'|<=1, quadratic falloff beyond positive thresholds "
             "(max residual %.2e, max |f'| %.12f, %.2fs)",
             max_resid, max_deriv, dt));
}

// ---- 2: variance slope floor ------------------------------------------------

void criterion_2() {
  const double k = variance_lower_constant();
  const bool pass = std::fabs(k - 0.21367) <= 5e-5;
  report(2, pass, fmt("variance floor constant = %.6f (pinned 0.21367 +- 5e-5)", k));
}

// ---- 3: flat profile reconstructs the normal law ---------------------------

void criterion_3() {
  const GFunction unit = g_constant(1.0);
  const double m = std::sqrt(2.0 / kPi);
  double worst_tail = 0.0, worst_dens = 0.0;
  for (double x : {0.5, 1.0, 2.0, 3.0})
    worst_tail = std::max(worst_tail, std::fabs(tail_from_g(unit, m, x).value - normal_tail(x)));
  for (double z : {-1.0, 0.0, 0.5, 1.0, 2.0, 3.0})
    worst_dens = std::max(worst_dens, std::fabs(density_from_g(unit, m, z) - normal_pdf(z)));
  const bool pass = worst_tail <= 1e-8 && worst_dens <= 1e-8;
  report(3, pass,
         fmt("unit profile -> normal tail/density within 1e-8 (tail err %.2e, density err %.2e)",
             worst_tail, worst_dens));
}

// ---- 4: affine profile reconstructs the shifted-square law -----------------

void criterion_4() {
  const GFunction g = g_affine(2.0, 2.0, -1.0);
  const double m = 4.0 * normal_pdf(1.0);
  const std::vector<double> grid{-0.9, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0,
                                 10.0};
  double worst = 0.0;
  for (double z : grid) {
    const double truth = std::exp(-0.5 * (1.0 + z)) / std::sqrt(2.0 * kPi * (1.0 + z));
    worst = std::max(worst, std::fabs(density_from_g(g, m, z) / truth - 1.0));
  }
  for (double z : grid) {
    if (!(z > 0.0)) continue;
    const double truth = 2.0 * normal_tail(std::sqrt(1.0 + z));
    worst = std::max(worst, std::fabs(tail_from_g(g, m, z).value / truth - 1.0));
  }
  report(4, worst <= 1e-6,
         fmt("affine profile -> shifted-square tail/density within 1e-6 relative "
             "(worst %.2e)",
             worst));
}

// ---- 5: pairing identity under Monte Carlo ---------------------------------

void criterion_5() {
  const double t0 = now_s();
  const ChaosRV w1 = make_chaos(1, {{{1}, 1.0}});
  const ChaosRV he2 = make_chaos(1, {{{2}, 1.0}});
  const ChaosRV mix = make_chaos(1, {{{1}, 1.0}, {{2}, 1.0}});
  auto id = [](double x) { return x; };
  auto one = [](double) { return 1.0; };
  auto th = [](double x) { return std::tanh(x); };
  auto thp = [](double x) {
    const double t = std::tanh(x);
    return 1.0 - t * t;
  };
  bool pass = true;
  double worst_sigmas = 0.0, worst_exact = 0.0;
  std::uint64_t seed = 50101;
  for (const ChaosRV* x : {&w1, &he2, &mix}) {
    for (int hi = 0; hi < 2; ++hi) {
      const PairingCheck c = hi == 0 ? verify_identity_key(*x, id, one, 1000000, seed++)
                                     : verify_identity_key(*x, th, thp, 1000000, seed++);
      pass = pass && c.pass;
      if (c.se > 0.0) worst_sigmas = std::max(worst_sigmas, std::fabs(c.diff) / c.se);
    }
    const double ex =
        std::fabs(chaos_moments(gamma_g(*x)).mean - chaos_moments(*x).variance);
    worst_exact = std::max(worst_exact, ex);
  }
  const double dt = now_s() - t0;
  pass = pass && worst_exact <= 1e-12 && dt < 30.0;
  report(5, pass,
         fmt("E[Xh(X)]=E[h'(X)G] at n=1e6 within 4se, mean of G = Var exactly "
             "(worst %.2f se, exact gap %.1e, %.1fs)",
             worst_sigmas, worst_exact, dt));
}

// ---- 6: rotation representation of -DL^{-1} --------------------------------

void criterion_6() {
  const double t0 = now_s();
  bool pass = true;
  double worst = 0.0;

  struct Case {
    ChaosRV x;
    std::vector<double> w;
  };
  const std::vector<Case> cases{
      {make_chaos(1, {{{1}, 1.0}}), {0.4}},
      {make_chaos(1, {{{2}, 1.0}}), {0.4}},
      {make_chaos(2, {{{1, 1}, 1.0}}), {0.8, -0.2}},
  };
  std::uint64_t seed = 60101;
  for (const Case& c : cases) {
    const MehlerEstimate e = mehler_minus_dl_inverse(c.x, c.w, 24, 100000, seed++);
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double gap = std::fabs(e.value[i] - e.exact[i]);
      const double tol = 4.0 * e.se[i] + 1e-8;
      pass = pass && gap <= tol;
      worst = std::max(worst, gap - tol);
    }
  }
  double theta_err = 0.0;
  for (int n = 0; n <= 6; ++n)
    theta_err = std::max(theta_err, std::fabs(theta_weight_integral(n, 32) - 1.0 / (n + 1.0)));
  const double dt = now_s() - t0;
  pass = pass && theta_err <= 1e-12 && dt < 30.0;
  report(6, pass,
         fmt("rotation route matches coefficient route within 4se+1e-8 on orders 1-2; "
             "theta integrals exact to 1e-12 (theta err %.1e, %.1fs)",
             theta_err, dt));
}

// ---- 7-10 share artifacts so the rerun criterion can compare bytes ---------

struct PipelineArtifacts {
  std::vector<std::string> files;
};

PolymerConfig constant_field_config() {
  PolymerConfig c;
  c.cov = CovarianceSpec::constant(1.0, 4);
  c.t_grid = {1.0, 2.0, 4.0, 8.0};
  c.dt = 0.25;
  c.n_env = 2000;
  c.n_b = 100;
  c.seed = 70101;
  return c;
}

bool criterion_7_run(const std::string& suffix, std::string& detail,
                     PipelineArtifacts& art) {
  const PolymerRun run = run_polymer(constant_field_config());
  const std::vector<VarianceRow> rows = variance_vs_t(run);
  const std::vector<BoundRow> bounds = check_variance_bounds(run, rows);
  const std::string csv = "accept_constant_variance" + suffix + ".csv";
  write_variance_csv(csv, rows, bounds);
  art.files.push_back(csv);
  bool pass = true;
  double worst = 0.0;
  for (const VarianceRow& r : rows) {
    const double gap = std::fabs(r.var - r.t);
    pass = pass && gap <= 4.0 * r.var_se;
    worst = std::max(worst, gap / r.var_se);
  }
  for (const BoundRow& b : bounds) pass = pass && !b.violation;
  detail = fmt("constant field: Var(log u) = q t within 4se at every t "
               "(worst %.2f se, n_env=2000)",
               worst);
  return pass;
}

PolymerConfig ring_config() {
  PolymerConfig c;
  c.cov = CovarianceSpec::circle_cosine(1.0, 0.5, 16);
  c.t_grid = {4.0, 8.0, 16.0, 32.0, 64.0};
  c.dt = 0.25;
  c.n_env = 1000;
  c.n_b = 2000;
  c.seed = 80101;
  return c;
}

bool criterion_8_run(const std::string& suffix, std::string& detail,
                     PipelineArtifacts& art) {
  const PolymerRun run = run_polymer(ring_config());
  const std::vector<VarianceRow> rows = variance_vs_t(run);
  const std::vector<BoundRow> bounds = check_variance_bounds(run, rows);
  const ExponentFit fit = fit_fluctuation_exponent(rows);

  std::vector<double> a_grid;
  for (int i = 1; i <= 16; ++i) a_grid.push_back(0.25 * i * std::sqrt(run.q0));
  bool tails_ok = true;
  std::vector<TailCheckRow> last_rows;
  for (std::size_t ti = 0; ti < run.t.size(); ++ti) {
    const auto tc = empirical_tail_check(run, ti, a_grid);
    for (const TailCheckRow& r : tc) tails_ok = tails_ok && !r.upper_violation;
    if (ti + 1 == run.t.size()) last_rows = tc;
  }

  const std::string vcsv = "accept_ring_variance" + suffix + ".csv";
  const std::string tcsv = "accept_ring_tail" + suffix + ".csv";
  write_variance_csv(vcsv, rows, bounds);
  write_tail_check_csv(tcsv, last_rows);
  art.files.push_back(vcsv);
  art.files.push_back(tcsv);

  bool pass = tails_ok;
  for (const BoundRow& b : bounds) pass = pass && !b.violation;
  const bool chi_ok = fit.chi >= 0.4 && fit.chi <= 0.6;
  const bool r2_ok = fit.r2 >= 0.95;
  pass = pass && chi_ok && r2_ok;
  detail = fmt("cosine ring: variance inside [%.4f t, %.4f t], chi=%.3f in [0.4,0.6], "
               "r2=%.4f>=0.95, no upper-tail crossing at DKW 0.99",
               variance_lower_constant() * run.qm, 0.25 * kPi * kPi * run.q0, fit.chi,
               fit.r2);
  return pass;
}

PolymerConfig superlinear_config() {
  PolymerConfig c;
  c.cov = CovarianceSpec::circle_cosine(0.08, 0.02, 16);
  c.t_grid = {4.0, 8.0, 16.0, 32.0, 64.0};
  c.dt = 0.25;
  c.n_env = 1000;
  c.n_b = 2000;
  c.kind = HamiltonianKind::NonlinearAbs;
  c.seed = 90101;
  return c;
}

bool criterion_9_run(const std::string& suffix, std::string& detail,
                     PipelineArtifacts& art) {
  const PolymerRun run = run_polymer(superlinear_config());
  const std::vector<VarianceRow> rows = variance_vs_t(run);
  const std::vector<BoundRow> bounds = check_variance_bounds(run, rows);
  const ExponentFit fit = fit_fluctuation_exponent(rows);

  const std::string csv = "accept_superlinear_variance" + suffix + ".csv";
  write_variance_csv(csv, rows, bounds);
  art.files.push_back(csv);

  bool pass = run.warnings.empty();  // q0 = 0.1 < 1/9: hypothesis satisfied
  for (const BoundRow& b : bounds) {
    pass = pass && !b.violation;
    pass = pass && (b.var + 4.0 * b.var_se >= b.lower);
    pass = pass && (b.var - 4.0 * b.var_se <= b.upper);
  }
  const bool chi_ok = fit.chi >= 0.4 && fit.chi <= 0.6;
  pass = pass && chi_ok;
  detail = fmt("superlinear energy: floor %.4f t and cubic-ceiling %.4f t both hold, "
               "chi=%.3f in [0.4,0.6]",
               variance_lower_constant() * run.qm,
               2.0 * 256.0 * 0.25 * kPi * kPi * run.q0 * run.q0 * run.q0, fit.chi);
  return pass;
}

bool criterion_10_run(const std::string& suffix, std::string& detail,
                      PipelineArtifacts& art) {
  const CovarianceSpec cov = CovarianceSpec::circle_cosine(1.0, 0.5, 16);
  const PairingEstimate pe =
      estimate_gamma_g_polymer(cov, 16.0, 64, 8, 16, 2000, 0.25, 100101);

  const std::string csv = "accept_pairing" + suffix + ".csv";
  {
    CsvWriter w(csv, {"env", "pairing", "overlap"});
    for (std::size_t e = 0; e < pe.per_env.size(); ++e)
      w.row({format_g(static_cast<double>(e)), format_g(pe.per_env[e]),
             format_g(pe.per_env_overlap[e])});
  }
  art.files.push_back(csv);

  const double qm = 0.5, q0 = 1.5;
  const bool in_band =
      pe.estimate >= qm - 4.0 * pe.se && pe.estimate <= q0 + 4.0 * pe.se;
  const double gap_se = std::hypot(pe.se, pe.overlap_se);
  const bool below = pe.estimate <= pe.overlap_mean + 4.0 * gap_se;
  detail = fmt("pairing estimate %.4f +- %.4f inside [qm, q0] band and <= replica "
               "overlap %.4f +- %.4f",
               pe.estimate, pe.se, pe.overlap_mean, pe.overlap_se);
  return in_band && below;
}

void criteria_7_to_11() {
  PipelineArtifacts first, rerun;
  std::string d7, d8, d9, d10, scratch;

  const bool p7 = criterion_7_run("", d7, first);
  report(7, p7, d7);
  const bool p8 = criterion_8_run("", d8, first);
  report(8, p8, d8);
  const bool p9 = criterion_9_run("", d9, first);
  report(9, p9, d9);
  const bool p10 = criterion_10_run("", d10, first);
  report(10, p10, d10);

  criterion_7_run("_rerun", scratch, rerun);
  criterion_8_run("_rerun", scratch, rerun);
  criterion_9_run("_rerun", scratch, rerun);
  criterion_10_run("_rerun", scratch, rerun);

  bool identical = first.files.size() == rerun.files.size();
  std::string offender;
  for (std::size_t i = 0; identical && i < first.files.size(); ++i) {
    if (!files_equal(first.files[i], rerun.files[i])) {
      identical = false;
      offender = first.files[i];
    }
  }
  report(11, identical,
         identical ? "identical seeds reproduce byte-identical CSV artifacts"
                   : fmt("rerun artifact differs: %s", offender.c_str()));
}

}  // namespace

int main() {
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criteria_7_to_11();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  if (failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return 1;
}
