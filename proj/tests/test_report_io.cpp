#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mst/report.hpp"

using namespace mst;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("io_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};
}  // namespace

TEST_CASE("numeric formatting is fixed-width-significant and stable") {
  REQUIRE(format_g(0.1) == "0.1");
  REQUIRE(format_g(1.0) == "1");
  REQUIRE(format_g(-2.5e-8) == "-2.5e-08");
  REQUIRE(format_g(1234567890123.0) == "1.23456789012e+12");
  REQUIRE(format_g(0.0) == "0");
  // the same double always prints the same bytes
  const double v = 0.1 + 0.2;
  REQUIRE(format_g(v) == format_g(0.30000000000000004));
}

TEST_CASE("csv writer: header, LF endings, column discipline") {
  TempFile f("basic.csv");
  {
    CsvWriter w(f.path, {"a", "b"});
    w.row_numeric({1.0, 2.5});
    w.row({"x", "y"});
    REQUIRE_THROWS_AS(w.row({"only-one"}), std::logic_error);
  }
  const std::string bytes = slurp(f.path);
  REQUIRE(bytes == "a,b\n1,2.5\nx,y\n");
  REQUIRE(bytes.find('\r') == std::string::npos);
}

TEST_CASE("unknown configuration keys are fatal") {
  const ordered_json j = ordered_json::parse(R"({"form":"constant","c":1.0,"zz":3})");
  REQUIRE_THROWS_WITH(gfunction_from_json(j),
                      Catch::Matchers::ContainsSubstring("unknown key"));
  REQUIRE_THROWS_WITH(require_keys(ordered_json::parse(R"({"a":1})"), {"a", "b"}, {}, "cfg"),
                      Catch::Matchers::ContainsSubstring("missing key"));
  REQUIRE_THROWS_AS(require_keys(ordered_json::parse("[1,2]"), {}, {}, "cfg"),
                    std::invalid_argument);
}

TEST_CASE("profile serialization round-trips every form") {
  const std::vector<GFunction> forms{
      g_constant(1.5),
      g_affine(2.0, 2.0, -1.0),
      g_quadratic(0.4),
      g_power(0.5, 2.0, 1.0, {0.0, 1.0}, {0.5, 0.5}),
      g_tabulated({0.0, 1.0, 2.0}, {1.0, 2.0, 3.0}, {0.1, 0.1, 0.2}),
  };
  for (const GFunction& g : forms) {
    const GFunction back = gfunction_from_json(gfunction_to_json(g));
    for (double y : {0.1, 0.9, 1.7, 5.0})
      REQUIRE(back(y) == Catch::Approx(g(y)).epsilon(1e-15));
    REQUIRE(back.support_left == g.support_left);
  }
  REQUIRE_THROWS_AS(gfunction_from_json(ordered_json::parse(R"({"form":"cubic","c":1})")),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(gfunction_from_json(ordered_json::parse(R"({"c":1})")),
                    std::invalid_argument);
}

TEST_CASE("chaos serialization round-trips") {
  const ChaosRV x = make_chaos(2, {{{1, 0}, 1.0}, {{2, 1}, -0.25}, {{0, 0}, 3.0}});
  const ChaosRV back = chaos_from_json(chaos_to_json(x));
  REQUIRE(back.dim == 2);
  REQUIRE(back.terms == x.terms);

  REQUIRE_THROWS_AS(
      chaos_from_json(ordered_json::parse(R"({"dim":2,"terms":[{"alpha":[1],"coeff":1}]})")),
      std::invalid_argument);
  REQUIRE_THROWS_AS(chaos_from_json(ordered_json::parse(R"({"dim":0,"terms":[]})")),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(chaos_from_json(ordered_json::parse(R"({"dim":1})")),
                    std::invalid_argument);
}

TEST_CASE("covariance and polymer configuration round-trips") {
  for (const CovarianceSpec& s :
       {CovarianceSpec::constant(1.0, 4), CovarianceSpec::circle_cosine(1.0, 0.5, 16)}) {
    const CovarianceSpec back = covariance_from_json(covariance_to_json(s));
    REQUIRE(back.kind == s.kind);
    REQUIRE(back.p == s.p);
    REQUIRE(back.q == s.q);
    REQUIRE(back.a == s.a);
    REQUIRE(back.b == s.b);
  }
  Eigen::MatrixXd q(2, 2);
  q << 1.0, 0.5, 0.5, 1.0;
  const CovarianceSpec k = CovarianceSpec::matrix(q);
  const CovarianceSpec kb = covariance_from_json(covariance_to_json(k));
  REQUIRE(kb.kind == CovKind::Kernel);
  REQUIRE((kb.kernel - q).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_THROWS_AS(
      covariance_from_json(ordered_json::parse(R"({"kind":"kernel","matrix":[[1,0]]})")),
      std::invalid_argument);

  PolymerConfig c;
  c.cov = CovarianceSpec::circle_cosine(1.0, 0.5, 16);
  c.t_grid = {4.0, 8.0};
  c.n_env = 10;
  c.n_b = 20;
  c.dt = 0.5;
  c.kind = HamiltonianKind::NonlinearAbs;
  c.seed = 99;
  c.threads = 2;
  const PolymerConfig back = polymer_config_from_json(polymer_config_to_json(c));
  REQUIRE(back.t_grid == c.t_grid);
  REQUIRE(back.n_env == c.n_env);
  REQUIRE(back.n_b == c.n_b);
  REQUIRE(back.dt == c.dt);
  REQUIRE(back.kind == c.kind);
  REQUIRE(back.seed == c.seed);
  REQUIRE(back.threads == c.threads);

  ordered_json bad = polymer_config_to_json(c);
  bad["hamiltonian"] = "exotic";
  REQUIRE_THROWS_AS(polymer_config_from_json(bad), std::invalid_argument);
  bad = polymer_config_to_json(c);
  bad["surprise"] = 1;
  REQUIRE_THROWS_AS(polymer_config_from_json(bad), std::invalid_argument);
}

TEST_CASE("tail report artifacts") {
  TailReport r;
  r.abscissae = {1.0, 2.0};
  r.tail = {0.1, 0.02};
  r.density = {0.2, 0.05};
  r.envelopes["upper_unit_g"] = {0.3, 0.06};
  r.violations.emplace_back("upper_unit_g", 2.0);

  TempFile f("tail.csv");
  write_tail_report_csv(f.path, r);
  const std::string bytes = slurp(f.path);
  REQUIRE(bytes ==
          "x,tail,density,upper_unit_g,violation\n"
          "1,0.1,0.2,0.3,0\n"
          "2,0.02,0.05,0.06,1\n");

  const ordered_json j = tail_report_to_json(r);
  REQUIRE(j["violations"].size() == 1);
  REQUIRE(j["violations"][0]["bound"] == "upper_unit_g");
  REQUIRE(j["envelopes"]["upper_unit_g"][1] == 0.06);
}

TEST_CASE("variance and deviation-tail tables have documented columns") {
  const std::vector<VarianceRow> rows{{1.0, 100, 1.1, 0.05, 0.0, 0.03, 0.001}};
  const std::vector<BoundRow> bounds{{1.0, 1.1, 0.05, 0.2, 2.5, false}};
  TempFile fv("variance.csv");
  write_variance_csv(fv.path, rows, bounds);
  const std::string vb = slurp(fv.path);
  REQUIRE(vb.rfind("t,n_env,var,var_se,mean,mean_se,bias,lower_bound,upper_bound,violation\n",
                   0) == 0);
  REQUIRE(vb.find("\r") == std::string::npos);

  const std::vector<TailCheckRow> tc{{0.5, 0.1, 0.05, 0.15, 0.2, 0.01, false, false, false}};
  TempFile ft("tailcheck.csv");
  write_tail_check_csv(ft.path, tc);
  REQUIRE(slurp(ft.path).rfind(
              "a,empirical,dkw_lo,dkw_hi,ld_upper,ld2_lower,"
              "upper_violation,lower_applicable,lower_violation\n",
              0) == 0);
}

TEST_CASE("json artifacts carry their only timestamp in the header") {
  const ordered_json h = json_header("demo");
  REQUIRE(h.contains("tool"));
  REQUIRE(h.contains("generated_at"));
  const std::string ts = h["generated_at"].get<std::string>();
  REQUIRE(ts.size() == 20);  // ISO-8601 UTC: YYYY-MM-DDTHH:MM:SSZ
  REQUIRE(ts.back() == 'Z');
}
