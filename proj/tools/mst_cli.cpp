// mst -- batch experiment runner.
//
// Subcommands: stein, tail, chaos, polymer.  Each takes a JSON config
// (strictly validated: unknown keys are rejected) and writes plot-ready CSV
// and JSON into --out.  Exit codes: 0 pass, 1 config error, 2 verification
// failure, 3 budget exceeded.  Identical config + seed reproduce byte-
// identical CSVs; the only wall-clock field lives in the JSON headers.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mst/chaos.hpp"
#include "mst/chaos_mc.hpp"
#include "mst/covariance.hpp"
#include "mst/gaussian.hpp"
#include "mst/gfunction.hpp"
#include "mst/polymer.hpp"
#include "mst/report.hpp"
#include "mst/stein.hpp"
#include "mst/tail_engine.hpp"

namespace fs = std::filesystem;
using mst::ordered_json;

namespace {

constexpr const char* kCsvColumnDoc = R"(CSV column reference
  stein_z*.csv   : x            grid point
                   f            bounded solution of f'(x) - x f(x) = 1_{x<=z} - P[Z<=z]
                   fp_left      left derivative of f at x
                   fp_right     right derivative of f at x
                   residual     equation residual with the left derivative (0 in exact math)
  tail_report.csv: x            abscissa
                   tail         reconstructed P[X > x]
                   density      reconstructed density at x
                   <bounds...>  one column per requested/selected envelope curve
                   violation    1 if any envelope is crossed at this x
  variance.csv   : t            physical time
                   n_env        environments used
                   var          sample variance of log u-hat across environments
                   var_se       jackknife standard error of var
                   mean         mean of log u-hat
                   mean_se      standard error of the mean
                   bias         environment-mean jackknife bias of log u-hat
                   lower_bound  K_u * qm * t
                   upper_bound  (pi/2)^2 q0 t (linear) or 2*2^8(pi/2)^2 q0^3 t (nonlinear_abs)
                   violation    1 if the 4-se band misses the bracket
  tail_check.csv : a            deviation scale (P[|log u - mean| > a sqrt(t)])
                   empirical    empirical exceedance frequency
                   dkw_lo/hi    0.99-level DKW band around `empirical`
                   ld_upper     1 ^ (2 sqrt(q0)/(a sqrt(2pi))) exp(-a^2/(2 q0))
                   ld2_lower    0.9 sqrt(qm)/(a sqrt(2pi)) exp(-a^2/(2 qm))
                   upper_violation   1 if dkw_lo > ld_upper
                   lower_applicable  1 in the large-a regime (a/sqrt(qm) >= sqrt(10))
                   lower_violation   1 if applicable and dkw_hi < ld2_lower)";

ordered_json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  return j;
}

std::vector<double> grid_from_json(const ordered_json& j, const std::string& where) {
  if (j.is_array()) return j.get<std::vector<double>>();
  mst::require_keys(j, {"min", "max", "n"}, {}, where);
  const double lo = j.at("min").get<double>(), hi = j.at("max").get<double>();
  const int n = j.at("n").get<int>();
  if (n < 2 || !(hi > lo)) throw std::invalid_argument(where + ": need n >= 2 and max > min");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

// ---- stein ------------------------------------------------------------

int cmd_stein(const ordered_json& cfg, const fs::path& out, std::optional<double> tol_flag) {
  mst::require_keys(cfg, {}, {"z_list", "grid", "tol"}, "stein config");
  std::vector<double> z_list = {-3.0, -1.0, 0.0, 1.0, 2.0, 3.0};
  if (cfg.contains("z_list")) z_list = cfg.at("z_list").get<std::vector<double>>();
  std::vector<double> grid;
  if (cfg.contains("grid"))
    grid = grid_from_json(cfg.at("grid"), "stein grid");
  else
    grid = grid_from_json(ordered_json{{"min", -8.0}, {"max", 8.0}, {"n", 2001}}, "stein grid");
  double tol = cfg.contains("tol") ? cfg.at("tol").get<double>() : 1e-10;
  if (tol_flag) tol = *tol_flag;

  double worst = 0.0;
  for (std::size_t zi = 0; zi < z_list.size(); ++zi) {
    const double z = z_list[zi];
    mst::CsvWriter csv((out / ("stein_z" + std::to_string(zi) + ".csv")).string(),
                       {"x", "f", "fp_left", "fp_right", "residual"});
    for (double x : grid) {
      const double r = mst::stein_residual(z, x);
      worst = std::max(worst, std::fabs(r));
      csv.row_numeric({x, mst::stein_solution(z, x), mst::stein_derivative_left(z, x),
                       mst::stein_derivative_right(z, x), r});
    }
  }
  ordered_json summary = mst::json_header("stein");
  summary["z_list"] = z_list;
  summary["max_abs_residual"] = worst;
  summary["tol"] = tol;
  summary["pass"] = worst < tol;
  mst::write_json((out / "stein_summary.json").string(), summary);
  if (!(worst < tol)) {
    std::cerr << "stein: max |residual| " << worst << " >= tol " << tol << "\n";
    return 2;
  }
  return 0;
}

// ---- tail -------------------------------------------------------------

int cmd_tail(const ordered_json& cfg, const fs::path& out, std::optional<double> tol_flag) {
  mst::require_keys(cfg, {"g", "mean_abs", "x_grid"},
                    {"tol", "bounds", "moment_order", "assume_unit_g"}, "tail config");
  const mst::GFunction g = mst::gfunction_from_json(cfg.at("g"));
  const double mean_abs = cfg.at("mean_abs").get<double>();
  const std::vector<double> xs = grid_from_json(cfg.at("x_grid"), "tail x_grid");
  double tol = cfg.contains("tol") ? cfg.at("tol").get<double>() : 1e-10;
  if (tol_flag) tol = *tol_flag;
  const double moment_order =
      cfg.contains("moment_order") ? cfg.at("moment_order").get<double>() : 4.0;
  const bool assume_unit = cfg.contains("assume_unit_g") && cfg.at("assume_unit_g").get<bool>();

  std::optional<mst::TailBoundCase> bound_case;
  if (cfg.contains("bounds")) {
    const ordered_json& b = cfg.at("bounds");
    mst::require_keys(b, {"case"}, {"cdd", "c1", "p", "z0", "reversed"}, "tail bounds");
    mst::TailBoundCase c;
    const std::string name = b.at("case").get<std::string>();
    if (name == "gaussian")
      c.regime = mst::TailRegime::gaussian;
    else if (name == "power")
      c.regime = mst::TailRegime::power;
    else if (name == "stretched")
      c.regime = mst::TailRegime::stretched;
    else
      throw std::invalid_argument("tail bounds: case must be gaussian|power|stretched");
    if (b.contains("cdd")) c.cdd = b.at("cdd").get<double>();
    if (b.contains("c1")) c.c1 = b.at("c1").get<double>();
    if (b.contains("p")) c.p = b.at("p").get<double>();
    if (b.contains("z0")) c.z0 = b.at("z0").get<double>();
    if (b.contains("reversed")) c.reversed = b.at("reversed").get<bool>();
    bound_case = c;
  }

  mst::TailReport report;
  bool extrapolated = false;
  for (double x : xs) {
    const mst::TailEvaluation te = mst::tail_from_g(g, mean_abs, x, tol);
    report.abscissae.push_back(x);
    report.tail.push_back(te.value);
    report.density.push_back(mst::density_from_g(g, mean_abs, x, tol));
    extrapolated = extrapolated || te.extrapolated;
    const mst::TailEnvelopes env = mst::tail_envelopes(x, moment_order);
    report.envelopes["upper_unit_g"].push_back(env.upper_unit_g);
    report.envelopes["upper_unit_gradient"].push_back(env.upper_unit_gradient);
    if (assume_unit && te.value > env.upper_unit_g + tol)
      report.violations.emplace_back("upper_unit_g", x);
    if (bound_case) {
      try {
        const mst::TailBound tb = mst::lower_bound_menu(g, mean_abs, x, *bound_case, tol);
        const char* name = tb.upper_envelope ? "menu_upper" : "menu_lower";
        report.envelopes[name].push_back(tb.value);
        if (!tb.upper_envelope && te.value < tb.value - tol)
          report.violations.emplace_back(name, x);
        if (tb.upper_envelope && te.value > tb.value + tol)
          report.violations.emplace_back(name, x);
      } catch (const std::invalid_argument&) {
        // x below the case threshold z0: bound undefined there
        report.envelopes[bound_case->reversed ? "menu_upper" : "menu_lower"].push_back(
            std::numeric_limits<double>::quiet_NaN());
      }
    }
  }

  mst::write_tail_report_csv((out / "tail_report.csv").string(), report);
  ordered_json j = mst::json_header("tail");
  j["g"] = mst::gfunction_to_json(g);
  j["mean_abs"] = mean_abs;
  j["extrapolated"] = extrapolated;
  j["report"] = mst::tail_report_to_json(report);
  mst::write_json((out / "tail_report.json").string(), j);
  if (!report.violations.empty()) {
    std::cerr << "tail: " << report.violations.size() << " envelope violation(s)\n";
    return 2;
  }
  return 0;
}

// ---- chaos -------------------------------------------------------------

mst::ChaosRV default_chaos(const std::string& which) {
  if (which == "w1") return mst::make_chaos(1, {{{1}, 1.0}});
  if (which == "he2") return mst::make_chaos(1, {{{2}, 1.0}});
  if (which == "w1+he2") return mst::make_chaos(1, {{{1}, 1.0}, {{2}, 1.0}});
  throw std::invalid_argument("unknown chaos shorthand '" + which + "'");
}

mst::ChaosRV chaos_from_cfg(const ordered_json& j) {
  if (j.is_string()) return default_chaos(j.get<std::string>());
  return mst::chaos_from_json(j);
}

int cmd_chaos(const std::string& suite, const ordered_json& cfg, const fs::path& out,
              std::optional<std::uint64_t> seed_flag) {
  std::uint64_t seed = cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : 20240901ull;
  if (seed_flag) seed = *seed_flag;
  ordered_json j = mst::json_header("chaos-" + suite);
  bool pass = true;

  if (suite == "lemkey") {
    mst::require_keys(cfg, {}, {"x_list", "n", "seed"}, "lemkey config");
    std::vector<ordered_json> xs = {"w1", "he2", "w1+he2"};
    if (cfg.contains("x_list")) xs = cfg.at("x_list").get<std::vector<ordered_json>>();
    const std::size_t n = cfg.contains("n") ? cfg.at("n").get<std::size_t>() : 1000000;
    j["records"] = ordered_json::array();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const mst::ChaosRV x = chaos_from_cfg(xs[i]);
      struct Hh {
        const char* name;
        std::function<double(double)> h, hp;
      };
      const Hh hs[2] = {{"identity", [](double v) { return v; }, [](double) { return 1.0; }},
                        {"tanh", [](double v) { return std::tanh(v); },
                         [](double v) { const double c = std::cosh(v); return 1.0 / (c * c); }}};
      for (const Hh& hh : hs) {
        const mst::PairingCheck pc =
            mst::verify_identity_key(x, hh.h, hh.hp, n, seed + i);
        ordered_json rec;
        rec["x"] = mst::chaos_to_json(x);
        rec["h"] = hh.name;
        rec["lhs"] = pc.lhs;
        rec["rhs"] = pc.rhs;
        rec["diff"] = pc.diff;
        rec["se"] = pc.se;
        rec["n"] = pc.n;
        rec["pass"] = pc.pass;
        if (std::string(hh.name) == "identity") {
          const double var = mst::chaos_moments(x).variance;
          const double eg = mst::chaos_moments(mst::gamma_g(x)).mean;
          rec["exact_lhs"] = var;
          rec["exact_rhs"] = eg;
          rec["exact_match"] = std::fabs(var - eg) <= 1e-12 * std::max(1.0, var);
          pass = pass && rec["exact_match"].get<bool>();
        }
        pass = pass && pc.pass;
        j["records"].push_back(rec);
      }
    }
  } else if (suite == "lemsko") {
    mst::require_keys(cfg, {}, {"f", "y", "n", "seed"}, "lemsko config");
    const mst::ChaosRV f = cfg.contains("f") ? chaos_from_cfg(cfg.at("f"))
                                             : mst::make_chaos(2, {{{2, 0}, 1.0}, {{1, 1}, 0.5}});
    const mst::ChaosRV y =
        cfg.contains("y") ? chaos_from_cfg(cfg.at("y"))
                          : mst::make_chaos(2, {{{0, 0}, 0.3},
                                                {{1, 0}, 1.0},
                                                {{2, 0}, 0.7},
                                                {{0, 2}, -0.4},
                                                {{3, 0}, 0.2}});
    const std::size_t n = cfg.contains("n") ? cfg.at("n").get<std::size_t>() : 200000;
    const mst::ProjectionCheck pc = mst::verify_projection_identity(f, y, n, seed);
    j["exact_lhs"] = pc.exact_lhs;
    j["exact_rhs"] = pc.exact_rhs;
    j["exact_match"] =
        std::fabs(pc.exact_lhs - pc.exact_rhs) <= 1e-12 * std::max(1.0, std::fabs(pc.exact_lhs));
    j["mc_lhs"] = pc.mc.lhs;
    j["mc_rhs"] = pc.mc.rhs;
    j["mc_diff"] = pc.mc.diff;
    j["mc_se"] = pc.mc.se;
    j["mc_pass"] = pc.mc.pass;
    pass = j["exact_match"].get<bool>() && pc.mc.pass;
  } else if (suite == "mehler") {
    mst::require_keys(cfg, {}, {"x_list", "w", "nodes", "n_mc", "seed"}, "mehler config");
    std::vector<ordered_json> xs = {"w1", "he2"};
    if (cfg.contains("x_list")) xs = cfg.at("x_list").get<std::vector<ordered_json>>();
    std::vector<double> w = {0.4};
    if (cfg.contains("w")) w = cfg.at("w").get<std::vector<double>>();
    const int nodes = cfg.contains("nodes") ? cfg.at("nodes").get<int>() : 24;
    const std::size_t n_mc = cfg.contains("n_mc") ? cfg.at("n_mc").get<std::size_t>() : 100000;
    j["records"] = ordered_json::array();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const mst::ChaosRV x = chaos_from_cfg(xs[i]);
      std::vector<double> point(w);
      point.resize(static_cast<std::size_t>(x.dim), 0.4);
      const mst::MehlerEstimate me = mst::mehler_minus_dl_inverse(x, point, nodes, n_mc, seed + i);
      ordered_json rec;
      rec["x"] = mst::chaos_to_json(x);
      rec["value"] = me.value;
      rec["exact"] = me.exact;
      rec["se"] = me.se;
      bool ok = true;
      for (std::size_t s = 0; s < me.value.size(); ++s)
        ok = ok && std::fabs(me.value[s] - me.exact[s]) <= 4.0 * me.se[s] + 1e-8;
      rec["pass"] = ok;
      pass = pass && ok;
      j["records"].push_back(rec);
    }
    ordered_json qid = ordered_json::array();
    for (int nn = 0; nn <= 6; ++nn) {
      const double got = mst::theta_weight_integral(nn, 32);
      const double want = 1.0 / (nn + 1);
      qid.push_back({{"n", nn}, {"value", got}, {"exact", want}});
      pass = pass && std::fabs(got - want) <= 1e-12;
    }
    j["theta_weight_identity"] = qid;
  } else if (suite == "subgauss") {
    mst::require_keys(cfg, {}, {"x", "u_grid", "n", "seed"}, "subgauss config");
    const mst::ChaosRV x = cfg.contains("x") ? chaos_from_cfg(cfg.at("x")) : default_chaos("w1");
    std::vector<double> us = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    if (cfg.contains("u_grid")) us = cfg.at("u_grid").get<std::vector<double>>();
    const std::size_t n = cfg.contains("n") ? cfg.at("n").get<std::size_t>() : 200000;
    const mst::SubgaussianReport rep = mst::subgaussian_check(x, us, n, seed);
    j["sigma"] = rep.sigma;
    j["u"] = rep.u;
    j["empirical"] = rep.empirical;
    j["envelope"] = rep.envelope;
    j["dkw_half"] = rep.dkw_half;
    j["violations"] = rep.violations;
    pass = rep.violations.empty();
  } else if (suite == "gee") {
    mst::require_keys(cfg, {}, {"x", "n", "bins", "seed"}, "gee config");
    const mst::ChaosRV x = cfg.contains("x") ? chaos_from_cfg(cfg.at("x")) : default_chaos("he2");
    const std::size_t n = cfg.contains("n") ? cfg.at("n").get<std::size_t>() : 400000;
    const int bins = cfg.contains("bins") ? cfg.at("bins").get<int>() : 40;
    const mst::GEstimate ge = mst::estimate_g(x, n, bins, seed);
    j["x"] = mst::chaos_to_json(x);
    j["g"] = mst::gfunction_to_json(ge.g);
    j["mean_abs"] = ge.mean_abs;
    j["mean_abs_se"] = ge.mean_abs_se;
    j["n"] = ge.n;
    j["bins"] = ge.bins;
  } else {
    throw std::invalid_argument("chaos: unknown suite '" + suite + "'");
  }

  j["pass"] = pass;
  mst::write_json((out / ("chaos_" + suite + ".json")).string(), j);
  if (!pass) {
    std::cerr << "chaos " << suite << ": verification failed (see JSON record)\n";
    return 2;
  }
  return 0;
}

// ---- polymer -----------------------------------------------------------

int cmd_polymer(const std::string& mode, const ordered_json& cfg, const fs::path& out,
                std::optional<std::uint64_t> seed_flag, std::optional<int> threads_flag) {
  if (mode == "gee") {
    mst::require_keys(cfg, {"cov", "t", "n_env", "n_prime", "theta_nodes", "n_b", "dt", "seed"},
                      {"hamiltonian"}, "polymer gee config");
    mst::HamiltonianKind kind = mst::HamiltonianKind::Linear;
    if (cfg.contains("hamiltonian")) {
      const std::string h = cfg.at("hamiltonian").get<std::string>();
      if (h == "nonlinear_abs")
        kind = mst::HamiltonianKind::NonlinearAbs;
      else if (h != "linear")
        throw std::invalid_argument("polymer gee: hamiltonian must be linear|nonlinear_abs");
    }
    std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    if (seed_flag) seed = *seed_flag;
    const mst::CovarianceSpec cov = mst::covariance_from_json(cfg.at("cov"));
    const mst::CovarianceModel model = mst::build_covariance(cov);
    const mst::PairingEstimate pe = mst::estimate_gamma_g_polymer(
        cov, cfg.at("t").get<double>(), cfg.at("n_env").get<int>(), cfg.at("n_prime").get<int>(),
        cfg.at("theta_nodes").get<int>(), cfg.at("n_b").get<int>(), cfg.at("dt").get<double>(),
        seed, kind);
    ordered_json j = mst::json_header("polymer-gee");
    j["q0"] = model.q0;
    j["qm"] = model.qm;
    j["estimate"] = pe.estimate;
    j["se"] = pe.se;
    j["overlap_mean"] = pe.overlap_mean;
    j["overlap_se"] = pe.overlap_se;
    const bool in_band =
        pe.estimate >= model.qm - 4.0 * pe.se && pe.estimate <= model.q0 + 4.0 * pe.se;
    const bool below_overlap =
        pe.estimate <= pe.overlap_mean + 4.0 * std::hypot(pe.se, pe.overlap_se);
    j["in_band"] = in_band;
    j["below_overlap"] = below_overlap;
    j["pass"] = in_band && below_overlap;
    mst::write_json((out / "polymer_gee.json").string(), j);
    if (!(in_band && below_overlap)) {
      std::cerr << "polymer gee: estimate outside its proven bracket\n";
      return 2;
    }
    return 0;
  }

  ordered_json run_cfg = cfg;
  std::vector<double> a_grid;
  std::vector<double> chi_accept;
  std::size_t tail_t_index = SIZE_MAX;
  if (run_cfg.contains("a_grid")) {
    a_grid = grid_from_json(run_cfg.at("a_grid"), "polymer a_grid");
    run_cfg.erase("a_grid");
  }
  if (run_cfg.contains("chi_accept")) {
    chi_accept = run_cfg.at("chi_accept").get<std::vector<double>>();
    if (chi_accept.size() != 2) throw std::invalid_argument("chi_accept must be [lo, hi]");
    run_cfg.erase("chi_accept");
  }
  if (run_cfg.contains("tail_t_index")) {
    tail_t_index = run_cfg.at("tail_t_index").get<std::size_t>();
    run_cfg.erase("tail_t_index");
  }

  mst::PolymerConfig pc = mst::polymer_config_from_json(run_cfg);
  if (seed_flag) pc.seed = *seed_flag;
  if (threads_flag) pc.threads = *threads_flag;

  const mst::PolymerRun run = mst::run_polymer(pc);
  const std::vector<mst::VarianceRow> rows = mst::variance_vs_t(run);
  const std::vector<mst::BoundRow> bounds = mst::check_variance_bounds(run, rows);
  bool any_bound_violation = false;
  for (const mst::BoundRow& b : bounds) any_bound_violation = any_bound_violation || b.violation;

  ordered_json j = mst::json_header("polymer-" + mode);
  j["config"] = mst::polymer_config_to_json(pc);
  j["q0"] = run.q0;
  j["qm"] = run.qm;
  j["warnings"] = run.warnings;

  if (mode == "bounds") {
    mst::write_variance_csv((out / "variance.csv").string(), rows, bounds);
    j["bound_violations"] = any_bound_violation;
    mst::write_json((out / "polymer_bounds.json").string(), j);
    return any_bound_violation ? 2 : 0;
  }

  if (mode == "tail") {
    if (tail_t_index == SIZE_MAX) tail_t_index = run.t.size() - 1;
    if (a_grid.empty()) {
      const double s = std::sqrt(run.q0);
      for (int i = 1; i <= 16; ++i) a_grid.push_back(0.25 * i * s);
    }
    const std::vector<mst::TailCheckRow> tc = mst::empirical_tail_check(run, tail_t_index, a_grid);
    mst::write_tail_check_csv((out / "tail_check.csv").string(), tc);
    bool viol = false;
    for (const mst::TailCheckRow& r : tc) viol = viol || r.upper_violation;
    j["t"] = run.t[tail_t_index];
    j["upper_violations"] = viol;
    mst::write_json((out / "polymer_tail.json").string(), j);
    return viol ? 2 : 0;
  }

  if (mode != "run") throw std::invalid_argument("polymer: unknown mode '" + mode + "'");

  mst::write_variance_csv((out / "variance.csv").string(), rows, bounds);
  if (tail_t_index == SIZE_MAX) tail_t_index = run.t.size() - 1;
  if (a_grid.empty()) {
    const double s = std::sqrt(run.q0);
    for (int i = 1; i <= 16; ++i) a_grid.push_back(0.25 * i * s);
  }
  const std::vector<mst::TailCheckRow> tc = mst::empirical_tail_check(run, tail_t_index, a_grid);
  mst::write_tail_check_csv((out / "tail_check.csv").string(), tc);
  bool tail_violation = false;
  for (const mst::TailCheckRow& r : tc) tail_violation = tail_violation || r.upper_violation;

  const mst::ExponentFit fit = mst::fit_fluctuation_exponent(rows);
  j["fit"] = mst::exponent_fit_to_json(fit);
  for (const std::string& w : fit.warnings) j["warnings"].push_back(w);
  j["bound_violations"] = any_bound_violation;
  j["tail_upper_violations"] = tail_violation;
  bool chi_ok = true;
  if (!chi_accept.empty()) {
    chi_ok = fit.chi >= chi_accept[0] && fit.chi <= chi_accept[1];
    j["chi_accept"] = chi_accept;
    j["chi_ok"] = chi_ok;
  }
  mst::write_json((out / "polymer_run.json").string(), j);
  if (any_bound_violation || tail_violation || !chi_ok) {
    std::cerr << "polymer run: violation (bounds " << any_bound_violation << ", tail "
              << tail_violation << ", chi_ok " << chi_ok << ")\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-analysis toolbench: Stein solver checks, tail reconstruction from "
               "conditional-variance profiles, exact chaos-calculus verifications, and lattice "
               "polymer simulations.\n"};
  app.footer(kCsvColumnDoc);
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", chaos_suite, polymer_mode;
  std::optional<double> tol_flag;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> threads_flag;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", config_path, "JSON config file");
    if (need_config) opt->required();
    sub->add_option("--out", out_dir, "output directory (created if missing)");
    sub->add_option_function<double>("--tol", [&](double v) { tol_flag = v; },
                                     "override tolerance");
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { seed_flag = v; },
                                            "override master seed");
    sub->add_option_function<int>("--threads", [&](int v) { threads_flag = v; },
                                  "worker threads (results are thread-count independent)");
  };

  CLI::App* stein = app.add_subcommand("stein", "residual check of the Stein solver on a grid");
  add_common(stein, false);
  CLI::App* tail = app.add_subcommand("tail", "reconstruct tail/density from a g profile");
  add_common(tail, true);
  CLI::App* chaos = app.add_subcommand("chaos", "exact chaos-calculus verification suites");
  chaos->add_option("--suite", chaos_suite, "lemkey|lemsko|mehler|subgauss|gee")->required();
  add_common(chaos, false);
  CLI::App* polymer = app.add_subcommand("polymer", "lattice polymer simulations");
  polymer->add_option("mode", polymer_mode, "run|bounds|tail|gee")->required();
  add_common(polymer, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  try {
    ordered_json cfg = ordered_json::object();
    if (!config_path.empty()) cfg = load_config(config_path);
    fs::path out(out_dir);
    fs::create_directories(out);
    if (stein->parsed()) return cmd_stein(cfg, out, tol_flag);
    if (tail->parsed()) return cmd_tail(cfg, out, tol_flag);
    if (chaos->parsed()) return cmd_chaos(chaos_suite, cfg, out, seed_flag);
    if (polymer->parsed()) return cmd_polymer(polymer_mode, cfg, out, seed_flag, threads_flag);
    return 1;
  } catch (const mst::BudgetError& e) {
    std::cerr << "budget: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
