#pragma once

// report.hpp -- CSV/JSON emission and config-side parsing.  All numeric CSV
// output goes through one fixed "%.12g" formatter and LF line endings so a
// rerun with identical parameters is byte-identical; wall-clock information
// is confined to a single JSON header field.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mst/chaos.hpp"
#include "mst/covariance.hpp"
#include "mst/gfunction.hpp"
#include "mst/polymer.hpp"

namespace mst {

using ordered_json = nlohmann::ordered_json;

inline std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
    cols_ = header.size();
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_) throw std::logic_error("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void row_numeric(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double v : cells) s.push_back(format_g(v));
    row(s);
  }

 private:
  std::ofstream out_;
  std::size_t cols_ = 0;
};

inline std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Common JSON preamble; the timestamp lives here and nowhere else.
inline ordered_json json_header(const std::string& tool) {
  ordered_json h;
  h["tool"] = tool;
  h["generated_at"] = iso8601_now();
  return h;
}

inline void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

// ---- strict config parsing helpers --------------------------------------

inline void require_keys(const ordered_json& j, const std::vector<std::string>& required,
                         const std::vector<std::string>& optional, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  for (const auto& k : required)
    if (!j.contains(k)) throw std::invalid_argument(where + ": missing key '" + k + "'");
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    bool known = false;
    for (const auto& r : required) known = known || (k == r);
    for (const auto& o : optional) known = known || (k == o);
    if (!known) throw std::invalid_argument(where + ": unknown key '" + k + "'");
  }
}

// ---- GFunction <-> JSON ---------------------------------------------------

inline ordered_json gfunction_to_json(const GFunction& g) {
  ordered_json j;
  if (const auto* c = std::get_if<GConstant>(&g.form)) {
    j["form"] = "constant";
    j["c"] = c->c;
  } else if (const auto* a = std::get_if<GAffine>(&g.form)) {
    j["form"] = "affine";
    j["alpha"] = a->alpha;
    j["beta"] = a->beta;
  } else if (const auto* q = std::get_if<GQuadratic>(&g.form)) {
    j["form"] = "quadratic";
    j["cprime"] = q->cprime;
  } else if (const auto* p = std::get_if<GPower>(&g.form)) {
    j["form"] = "power";
    j["c1"] = p->c1;
    j["p"] = p->p;
    j["z0"] = p->z0;
    j["prefix_grid"] = p->prefix_grid;
    j["prefix_values"] = p->prefix_values;
  } else if (const auto* t = std::get_if<GTabulated>(&g.form)) {
    j["form"] = "tabulated";
    j["grid"] = t->grid;
    j["values"] = t->values;
    if (!t->se.empty()) j["se"] = t->se;
  }
  if (std::isfinite(g.support_left)) j["support_left"] = g.support_left;
  return j;
}

inline GFunction gfunction_from_json(const ordered_json& j) {
  if (!j.is_object() || !j.contains("form"))
    throw std::invalid_argument("g spec: expected object with 'form'");
  const std::string form = j.at("form").get<std::string>();
  const double support_left = j.contains("support_left")
                                  ? j.at("support_left").get<double>()
                                  : -std::numeric_limits<double>::infinity();
  if (form == "constant") {
    require_keys(j, {"form", "c"}, {"support_left"}, "g spec");
    return g_constant(j.at("c").get<double>());
  }
  if (form == "affine") {
    require_keys(j, {"form", "alpha", "beta"}, {"support_left"}, "g spec");
    return g_affine(j.at("alpha").get<double>(), j.at("beta").get<double>(), support_left);
  }
  if (form == "quadratic") {
    require_keys(j, {"form", "cprime"}, {"support_left"}, "g spec");
    return g_quadratic(j.at("cprime").get<double>());
  }
  if (form == "power") {
    require_keys(j, {"form", "c1", "p", "z0", "prefix_grid", "prefix_values"}, {"support_left"},
                 "g spec");
    return g_power(j.at("c1").get<double>(), j.at("p").get<double>(), j.at("z0").get<double>(),
                   j.at("prefix_grid").get<std::vector<double>>(),
                   j.at("prefix_values").get<std::vector<double>>());
  }
  if (form == "tabulated") {
    require_keys(j, {"form", "grid", "values"}, {"support_left", "se"}, "g spec");
    std::vector<double> se;
    if (j.contains("se")) se = j.at("se").get<std::vector<double>>();
    return g_tabulated(j.at("grid").get<std::vector<double>>(),
                       j.at("values").get<std::vector<double>>(), se);
  }
  throw std::invalid_argument("g spec: unknown form '" + form + "'");
}

// ---- ChaosRV <-> JSON -----------------------------------------------------

inline ordered_json chaos_to_json(const ChaosRV& x) {
  ordered_json j;
  j["dim"] = x.dim;
  j["terms"] = ordered_json::array();
  for (const auto& [alpha, coeff] : x.terms) {
    ordered_json t;
    t["alpha"] = alpha;
    t["coeff"] = coeff;
    j["terms"].push_back(t);
  }
  return j;
}

inline ChaosRV chaos_from_json(const ordered_json& j) {
  require_keys(j, {"dim", "terms"}, {}, "chaos spec");
  ChaosRV x;
  x.dim = j.at("dim").get<int>();
  if (x.dim < 1 || x.dim > 64) throw std::invalid_argument("chaos spec: dim out of range");
  for (const auto& t : j.at("terms")) {
    require_keys(t, {"alpha", "coeff"}, {}, "chaos term");
    MultiIndex alpha = t.at("alpha").get<MultiIndex>();
    if (static_cast<int>(alpha.size()) != x.dim)
      throw std::invalid_argument("chaos term: alpha length != dim");
    chaos_add_term(x, alpha, t.at("coeff").get<double>());
  }
  return x;
}

// ---- CovarianceSpec / PolymerConfig from JSON ------------------------------

inline CovarianceSpec covariance_from_json(const ordered_json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument("cov spec: expected object with 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    require_keys(j, {"kind", "q", "p"}, {}, "cov spec");
    return CovarianceSpec::constant(j.at("q").get<double>(), j.at("p").get<int>());
  }
  if (kind == "circle_cosine") {
    require_keys(j, {"kind", "a", "b", "p"}, {}, "cov spec");
    return CovarianceSpec::circle_cosine(j.at("a").get<double>(), j.at("b").get<double>(),
                                         j.at("p").get<int>());
  }
  if (kind == "kernel") {
    require_keys(j, {"kind", "matrix"}, {}, "cov spec");
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    const int p = static_cast<int>(rows.size());
    Eigen::MatrixXd q(p, p);
    for (int i = 0; i < p; ++i) {
      if (static_cast<int>(rows[i].size()) != p)
        throw std::invalid_argument("cov spec: matrix not square");
      for (int k = 0; k < p; ++k) q(i, k) = rows[i][k];
    }
    return CovarianceSpec::matrix(std::move(q));
  }
  throw std::invalid_argument("cov spec: unknown kind '" + kind + "'");
}

inline ordered_json covariance_to_json(const CovarianceSpec& s) {
  ordered_json j;
  switch (s.kind) {
    case CovKind::Constant:
      j["kind"] = "constant";
      j["q"] = s.q;
      j["p"] = s.p;
      break;
    case CovKind::CircleCosine:
      j["kind"] = "circle_cosine";
      j["a"] = s.a;
      j["b"] = s.b;
      j["p"] = s.p;
      break;
    case CovKind::Kernel: {
      j["kind"] = "kernel";
      std::vector<std::vector<double>> rows(s.p, std::vector<double>(s.p));
      for (int i = 0; i < s.p; ++i)
        for (int k = 0; k < s.p; ++k) rows[i][k] = s.kernel(i, k);
      j["matrix"] = rows;
      break;
    }
  }
  return j;
}

inline PolymerConfig polymer_config_from_json(const ordered_json& j) {
  require_keys(j, {"cov", "t_grid", "n_env", "n_b", "dt", "hamiltonian", "seed"},
               {"budget", "threads"}, "polymer config");
  PolymerConfig c;
  c.cov = covariance_from_json(j.at("cov"));
  c.t_grid = j.at("t_grid").get<std::vector<double>>();
  c.n_env = j.at("n_env").get<int>();
  c.n_b = j.at("n_b").get<int>();
  c.dt = j.at("dt").get<double>();
  const std::string h = j.at("hamiltonian").get<std::string>();
  if (h == "linear")
    c.kind = HamiltonianKind::Linear;
  else if (h == "nonlinear_abs")
    c.kind = HamiltonianKind::NonlinearAbs;
  else
    throw std::invalid_argument("polymer config: hamiltonian must be linear|nonlinear_abs");
  c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("budget")) c.budget = j.at("budget").get<double>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  return c;
}

inline ordered_json polymer_config_to_json(const PolymerConfig& c) {
  ordered_json j;
  j["cov"] = covariance_to_json(c.cov);
  j["t_grid"] = c.t_grid;
  j["n_env"] = c.n_env;
  j["n_b"] = c.n_b;
  j["dt"] = c.dt;
  j["hamiltonian"] = c.kind == HamiltonianKind::Linear ? "linear" : "nonlinear_abs";
  j["seed"] = c.seed;
  j["budget"] = c.budget;
  j["threads"] = c.threads;
  return j;
}

// ---- report writers -------------------------------------------------------

// Table of tail/density values with named bound curves; the shape shared by
// the tail subcommand's CSV and JSON outputs.
struct TailReport {
  std::vector<double> abscissae;
  std::vector<double> tail;
  std::vector<double> density;
  std::map<std::string, std::vector<double>> envelopes;
  std::vector<std::pair<std::string, double>> violations;  // (bound name, x)
};

inline void write_tail_report_csv(const std::string& path, const TailReport& r) {
  std::vector<std::string> header = {"x", "tail", "density"};
  for (const auto& [name, _] : r.envelopes) header.push_back(name);
  header.push_back("violation");
  CsvWriter csv(path, header);
  for (std::size_t i = 0; i < r.abscissae.size(); ++i) {
    std::vector<std::string> cells = {format_g(r.abscissae[i]), format_g(r.tail[i]),
                                      format_g(r.density[i])};
    for (const auto& [_, curve] : r.envelopes) cells.push_back(format_g(curve[i]));
    bool viol = false;
    for (const auto& [name, x] : r.violations) viol = viol || (x == r.abscissae[i]);
    cells.push_back(viol ? "1" : "0");
    csv.row(cells);
  }
}

inline ordered_json tail_report_to_json(const TailReport& r) {
  ordered_json j;
  j["x"] = r.abscissae;
  j["tail"] = r.tail;
  j["density"] = r.density;
  for (const auto& [name, curve] : r.envelopes) j["envelopes"][name] = curve;
  j["violations"] = ordered_json::array();
  for (const auto& [name, x] : r.violations) {
    ordered_json v;
    v["bound"] = name;
    v["x"] = x;
    j["violations"].push_back(v);
  }
  return j;
}

inline void write_variance_csv(const std::string& path, const std::vector<VarianceRow>& rows,
                               const std::vector<BoundRow>& bounds) {
  CsvWriter csv(path, {"t", "n_env", "var", "var_se", "mean", "mean_se", "bias", "lower_bound",
                       "upper_bound", "violation"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const VarianceRow& r = rows[i];
    const BoundRow& b = bounds[i];
    csv.row({format_g(r.t), std::to_string(r.n_env), format_g(r.var), format_g(r.var_se),
             format_g(r.mean), format_g(r.mean_se), format_g(r.bias), format_g(b.lower),
             format_g(b.upper), b.violation ? "1" : "0"});
  }
}

inline void write_tail_check_csv(const std::string& path, const std::vector<TailCheckRow>& rows) {
  CsvWriter csv(path, {"a", "empirical", "dkw_lo", "dkw_hi", "ld_upper", "ld2_lower",
                       "upper_violation", "lower_applicable", "lower_violation"});
  for (const TailCheckRow& r : rows)
    csv.row({format_g(r.a), format_g(r.empirical), format_g(r.dkw_lo), format_g(r.dkw_hi),
             format_g(r.ld_upper), format_g(r.ld2_lower), r.upper_violation ? "1" : "0",
             r.lower_applicable ? "1" : "0", r.lower_violation ? "1" : "0"});
}

inline ordered_json exponent_fit_to_json(const ExponentFit& f) {
  ordered_json j;
  j["chi"] = f.chi;
  j["chi_se"] = f.chi_se;
  j["r2"] = f.r2;
  j["slope"] = f.fit.slope;
  j["slope_se"] = f.fit.slope_se;
  j["intercept"] = f.fit.intercept;
  j["used_t"] = f.used_t;
  j["dropped_t"] = f.dropped_t;
  return j;
}

}  // namespace mst
