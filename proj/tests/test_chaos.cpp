#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mst/chaos.hpp"
#include "mst/stats.hpp"
#include "oracles.hpp"

using namespace mst;

namespace {
double coeff(const ChaosRV& x, const MultiIndex& a) {
  const auto it = x.terms.find(a);
  return it == x.terms.end() ? 0.0 : it->second;
}
}  // namespace

TEST_CASE("hermite evaluation matches the recurrence references") {
  const ChaosRV he2 = make_chaos(1, {{{2}, 1.0}});
  const ChaosRV he3 = make_chaos(1, {{{3}, 1.0}});
  const ChaosRV he4 = make_chaos(1, {{{4}, 1.0}});
  const ChaosRV he6 = make_chaos(1, {{{6}, 1.0}});
  REQUIRE(eval_chaos(he2, {0.7}) == Catch::Approx(oracle::he2_07).epsilon(1e-14));
  REQUIRE(eval_chaos(he3, {1.3}) == Catch::Approx(oracle::he3_13).epsilon(1e-14));
  REQUIRE(eval_chaos(he4, {-0.6}) == Catch::Approx(oracle::he4_m06).epsilon(1e-14));
  REQUIRE(eval_chaos(he6, {2.1}) == Catch::Approx(oracle::he6_21).epsilon(1e-13));
  REQUIRE_THROWS_AS(eval_chaos(he2, {0.7, 0.1}), std::invalid_argument);
}

TEST_CASE("pairwise hermite linearization has integer structure constants") {
  // He_1^2 = He_2 + 1
  auto c = detail::hermite_product_1d(1, 1);
  REQUIRE(c == std::vector<std::pair<std::uint32_t, std::uint64_t>>{{2, 1}, {0, 1}});
  // He_2^2 = He_4 + 4 He_2 + 2
  c = detail::hermite_product_1d(2, 2);
  REQUIRE(c == std::vector<std::pair<std::uint32_t, std::uint64_t>>{{4, 1}, {2, 4}, {0, 2}});
  // He_2 He_3 = He_5 + 6 He_3 + 6 He_1
  c = detail::hermite_product_1d(2, 3);
  REQUIRE(c == std::vector<std::pair<std::uint32_t, std::uint64_t>>{{5, 1}, {3, 6}, {1, 6}});

  // numeric consistency of the full product at a handful of points
  const ChaosRV a = make_chaos(1, {{{2}, 1.0}});
  const ChaosRV b = make_chaos(1, {{{3}, 1.0}});
  const ChaosRV ab = chaos_multiply(a, b);
  for (double w : {-1.7, 0.0, 0.4, 2.2})
    REQUIRE(eval_chaos(ab, {w}) ==
            Catch::Approx(eval_chaos(a, {w}) * eval_chaos(b, {w})).margin(1e-10));
}

TEST_CASE("products whose structure constants leave the exact range are rejected") {
  const ChaosRV big = make_chaos(1, {{{30}, 1.0}});
  REQUIRE_THROWS_AS(chaos_multiply(big, big), std::overflow_error);
}

TEST_CASE("moments and inner products by orthogonality") {
  // X = w_1 + He_2(w_1): mean 0, variance 1! + 2! = 3
  const ChaosRV x = make_chaos(1, {{{1}, 1.0}, {{2}, 1.0}});
  const ChaosMoments m = chaos_moments(x);
  REQUIRE(m.mean == 0.0);
  REQUIRE(m.variance == Catch::Approx(3.0).epsilon(1e-15));

  const ChaosRV y = make_chaos(2, {{{0, 0}, 2.5}, {{1, 1}, 0.5}, {{2, 0}, 1.0}});
  REQUIRE(chaos_moments(y).mean == 2.5);
  REQUIRE(chaos_moments(y).variance == Catch::Approx(0.25 + 2.0).epsilon(1e-15));

  // orthogonality: distinct multi-indices contribute nothing
  const ChaosRV a = make_chaos(2, {{{1, 0}, 1.0}});
  const ChaosRV b = make_chaos(2, {{{0, 1}, 1.0}});
  REQUIRE(chaos_inner(a, b) == 0.0);
  REQUIRE(chaos_inner(y, y) == Catch::Approx(2.5 * 2.5 + 2.25).epsilon(1e-15));

  // Monte Carlo cross-check of E[XY] for a nontrivial pair
  const ChaosRV u = make_chaos(2, {{{1, 1}, 1.0}, {{2, 0}, 0.5}});
  const ChaosRV v = make_chaos(2, {{{1, 1}, 2.0}, {{0, 2}, 1.0}});
  RngStream rng(3, "inner-mc");
  const int n = 400000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> w{rng.normal(), rng.normal()};
    const double p = eval_chaos(u, w) * eval_chaos(v, w);
    s += p;
    s2 += p * p;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  REQUIRE(chaos_inner(u, v) == Catch::Approx(2.0).epsilon(1e-15));
  REQUIRE(std::fabs(mean - 2.0) < 4.0 * se);
}

TEST_CASE("derivative lowers order coordinatewise") {
  // D(He_3(w_1)) = 3 He_2(w_1)
  const ChaosRV he3 = make_chaos(1, {{{3}, 1.0}});
  const auto d = malliavin_derivative(he3);
  REQUIRE(d.size() == 1);
  REQUIRE(coeff(d[0], {2}) == 3.0);
  REQUIRE(d[0].terms.size() == 1);

  // mixed term: D_1(w_1 w_2) = w_2, D_2(w_1 w_2) = w_1
  const ChaosRV mixed = make_chaos(2, {{{1, 1}, 1.0}});
  const auto dm = malliavin_derivative(mixed);
  REQUIRE(coeff(dm[0], {0, 1}) == 1.0);
  REQUIRE(coeff(dm[1], {1, 0}) == 1.0);

  // constants vanish
  const ChaosRV c = make_chaos(1, {{{0}, 5.0}});
  REQUIRE(malliavin_derivative(c)[0].terms.empty());
}

TEST_CASE("inverse number operator divides by the order") {
  const ChaosRV x = make_chaos(1, {{{1}, 2.0}, {{3}, 6.0}});
  const ChaosRV y = inverse_ou(x);
  REQUIRE(coeff(y, {1}) == 2.0);
  REQUIRE(coeff(y, {3}) == 2.0);
  REQUIRE_THROWS_AS(inverse_ou(make_chaos(1, {{{0}, 1.0}})), std::invalid_argument);
}

TEST_CASE("gamma factor closed forms") {
  // X = w_1: G = 1
  const ChaosRV w1 = make_chaos(1, {{{1}, 1.0}});
  const ChaosRV g1 = gamma_g(w1);
  REQUIRE(coeff(g1, {0}) == 1.0);
  REQUIRE(g1.terms.size() == 1);

  // X = He_2: DX = 2w, -L^{-1}X = X/2, G = 2w * w = 2 He_2 + 2
  const ChaosRV he2 = make_chaos(1, {{{2}, 1.0}});
  const ChaosRV g2 = gamma_g(he2);
  REQUIRE(coeff(g2, {2}) == 2.0);
  REQUIRE(coeff(g2, {0}) == 2.0);

  // X = w + He_2: G = 3 + 3 He_1 + 2 He_2
  const ChaosRV x = make_chaos(1, {{{1}, 1.0}, {{2}, 1.0}});
  const ChaosRV g3 = gamma_g(x);
  REQUIRE(coeff(g3, {0}) == 3.0);
  REQUIRE(coeff(g3, {1}) == 3.0);
  REQUIRE(coeff(g3, {2}) == 2.0);

  // a constant offset never changes G
  const ChaosRV shifted = make_chaos(1, {{{0}, 7.0}, {{1}, 1.0}, {{2}, 1.0}});
  REQUIRE(gamma_g(shifted).terms == g3.terms);
}

TEST_CASE("mean of the gamma factor equals the variance, exactly") {
  const std::vector<ChaosRV> cases{
      make_chaos(1, {{{1}, 0.7}}),
      make_chaos(1, {{{2}, 1.0}, {{4}, 0.25}}),
      make_chaos(2, {{{1, 1}, 1.0}, {{2, 0}, 0.5}, {{0, 3}, 0.1}}),
      make_chaos(3, {{{1, 1, 1}, 1.0}, {{2, 1, 0}, -0.4}, {{0, 0, 2}, 0.3}}),
  };
  for (const ChaosRV& x : cases) {
    const ChaosMoments gm = chaos_moments(gamma_g(x));
    const ChaosMoments xm = chaos_moments(x);
    REQUIRE(gm.mean == Catch::Approx(xm.variance).epsilon(1e-13));
  }
}

TEST_CASE("gradient norm dominates the gamma factor in mean") {
  // E||DX||^2 = sum |alpha| c_alpha^2 alpha! >= E[G] = Var(X)
  const ChaosRV x = make_chaos(2, {{{1, 1}, 1.0}, {{2, 0}, 0.5}, {{0, 3}, 0.1}});
  const double e_ndx = chaos_moments(norm_dx_squared(x)).mean;
  double expect = 0.0;
  for (const auto& [a, c] : x.terms) {
    double f = 1.0;
    for (auto v : a) f *= detail::factorial_d(v);
    expect += static_cast<double>(order_of(a)) * c * c * f;
  }
  REQUIRE(e_ndx == Catch::Approx(expect).epsilon(1e-13));
  REQUIRE(e_ndx >= chaos_moments(gamma_g(x)).mean);
}

TEST_CASE("sum, scale, and bookkeeping") {
  const ChaosRV a = make_chaos(1, {{{1}, 1.0}});
  const ChaosRV b = make_chaos(1, {{{1}, -1.0}, {{2}, 0.5}});
  const ChaosRV s = chaos_sum(a, b);
  REQUIRE(coeff(s, {1}) == 0.0);  // exact cancellation removes the term
  REQUIRE(s.terms.size() == 1);
  REQUIRE(coeff(chaos_scale(b, 2.0), {2}) == 1.0);
  REQUIRE(chaos_scale(b, 0.0).terms.empty());
  REQUIRE_THROWS_AS(chaos_sum(a, make_chaos(2, {{{1, 0}, 1.0}})), std::invalid_argument);
  REQUIRE_THROWS_AS(make_chaos(1, {{{1, 2}, 1.0}}), std::invalid_argument);
}
