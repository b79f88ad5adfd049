#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mst/stein.hpp"
#include "oracles.hpp"

using namespace mst;

TEST_CASE("bounded solution matches closed-form reference on all branches") {
  for (const auto& p : oracle::indicator_solution)
    REQUIRE(stein_solution(p.z, p.x) == Catch::Approx(p.f).epsilon(1e-13));
}

TEST_CASE("pointwise residual is machine noise across the plane") {
  // f'(x) - x f(x) - (1_{x<=z} - Phi(z)) evaluated far denser and further out
  // than any consumer needs
  for (double z : {-3.0, -1.0, -0.25, 0.0, 0.5, 1.0, 2.0, 3.0}) {
    double worst = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      const double x = -37.0 + 74.0 * i / 4000.0;
      worst = std::max(worst, std::fabs(stein_residual(z, x)));
    }
    CAPTURE(z, worst);
    REQUIRE(worst < 1e-13);
  }
}

TEST_CASE("solution is continuous with a unit derivative jump at the kink") {
  for (double z : {-2.0, 0.0, 1.5}) {
    REQUIRE(stein_derivative_left(z, z) - stein_derivative_right(z, z) ==
            Catch::Approx(1.0).margin(1e-12));
    const double eps = 1e-9;
    REQUIRE(stein_solution(z, z - eps) == Catch::Approx(stein_solution(z, z + eps)).margin(1e-7));
    REQUIRE_THROWS_AS(stein_derivative(z, z), std::domain_error);
    REQUIRE(stein_derivative(z, z + 0.5) == stein_derivative_right(z, z + 0.5));
  }
}

TEST_CASE("derivative never exceeds one in magnitude") {
  for (double z : {-3.0, -1.0, 0.0, 1.0, 2.0, 3.0}) {
    for (int i = 0; i <= 2000; ++i) {
      const double x = -20.0 + 40.0 * i / 2000.0;
      REQUIRE(std::fabs(stein_derivative_left(z, x)) <= 1.0 + 1e-12);
      REQUIRE(std::fabs(stein_derivative_right(z, x)) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("derivative decays quadratically beyond a positive threshold") {
  for (double z : {0.5, 1.0, 2.0, 3.0}) {
    for (double xi = z + 1e-3; xi < 40.0; xi *= 1.05) {
      const double bound = 1.0 / (1.0 + xi * xi) + 1e-12;
      REQUIRE(std::fabs(stein_derivative_right(z, xi)) <= bound);
      REQUIRE(std::fabs(stein_derivative_left(z, xi)) <= bound);
    }
  }
}

TEST_CASE("solution stays within the classical sup bound") {
  for (double z : {-3.0, 0.0, 0.7, 2.5}) {
    for (int i = 0; i <= 1000; ++i) {
      const double x = -37.0 + 74.0 * i / 1000.0;
      const double f = stein_solution(z, x);
      REQUIRE(f >= 0.0);
      REQUIRE(f <= kSqrt2Pi / 4.0 + 1e-12);
    }
  }
}

TEST_CASE("tail identity holds for a gaussian input") {
  auto sampler = [](RngStream& rng) { return rng.normal(); };
  const TailIdentityRecord r = tail_identity_mc(sampler, 1.0, 200000, 424242);
  // the residual is pointwise-algebraic, so the gap is roundoff-sized even
  // though each side alone carries O(1/sqrt(n)) noise
  REQUIRE(std::fabs(r.lhs - r.rhs) <= 4.0 * r.se + 1e-12);
  REQUIRE(r.lhs == Catch::Approx(oracle::phibar_1).margin(4.0 * 0.4 / std::sqrt(200000.0)));
}

TEST_CASE("tail identity holds for a skewed non-gaussian input") {
  // centered exponential: the identity is an identity in law, not a
  // gaussian-only approximation
  auto sampler = [](RngStream& rng) { return -std::log(rng.u01()) - 1.0; };
  const TailIdentityRecord r = tail_identity_mc(sampler, 0.7, 200000, 99);
  REQUIRE(std::fabs(r.lhs - r.rhs) <= 4.0 * r.se + 1e-12);
  // and the common-sample gap is far tighter than either side's own noise
  REQUIRE(r.se < 0.01);
}

TEST_CASE("tail identity rejects degenerate samplers") {
  auto constant = [](RngStream&) { return 1.0; };
  REQUIRE_THROWS_AS(tail_identity_mc(constant, 0.5, 100, 1), std::domain_error);
  auto ok = [](RngStream& rng) { return rng.normal(); };
  REQUIRE_THROWS_AS(tail_identity_mc(ok, 0.5, 1, 1), std::invalid_argument);
}
