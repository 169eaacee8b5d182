#include <doctest.h>

#include <cmath>
#include <random>

#include "herdlv/dynamics.hpp"
#include "herdlv/model.hpp"
#include "oracles.hpp"

using namespace herdlv;

namespace {

const ModelParams kBase = validate_params(0.5, 0.4, 0.65);

const Equilibrium* find(const std::vector<Equilibrium>& eqs, EquilibriumKind kind) {
  for (const auto& e : eqs) {
    if (e.kind == kind) return &e;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("validate_params accepts positive rates and names the offending field") {
  CHECK_NOTHROW(validate_params(0.5, 0.4, 0.65));
  CHECK_THROWS_WITH_AS(validate_params(0, 1, 1), doctest::Contains("r must be > 0"), ParameterError);
  CHECK_THROWS_WITH_AS(validate_params(1, 1, -1), doctest::Contains("beta must be > 0"), ParameterError);
  CHECK_THROWS_WITH_AS(validate_params(1, NAN, 1), doctest::Contains("alpha"), ParameterError);
  CHECK_THROWS_AS(validate_params(INFINITY, 1, 1), ParameterError);
}

TEST_CASE("equilibria at the reference parameters") {
  const auto eqs = equilibria(kBase);
  REQUIRE(eqs.size() == 3);
  const auto* origin = find(eqs, EquilibriumKind::Extinction);
  REQUIRE(origin);
  CHECK(origin->point == State{0, 0});
  CHECK(origin->stability == Stability::NotAnalyzable);

  const auto* prey = find(eqs, EquilibriumKind::PreyOnly);
  REQUIRE(prey);
  CHECK(prey->point == State{1, 0});
  CHECK(prey->stability == Stability::Saddle);

  const auto* interior = find(eqs, EquilibriumKind::Interior);
  REQUIRE(interior);
  CHECK(interior->point.x == doctest::Approx(0.378698).epsilon(1e-6));
  CHECK(interior->point.y == doctest::Approx(0.191171).epsilon(1e-5));
  CHECK(interior->stability == Stability::Stable);

  for (const auto& e : eqs) {
    const auto f = rhs_raw(kBase, e.point);
    CHECK(std::hypot(f[0], f[1]) <= 1e-12);
  }
}

TEST_CASE("no interior equilibrium unless beta > alpha") {
  const auto equal = equilibria(validate_params(1, 1, 1));
  CHECK(equal.size() == 2);
  CHECK_FALSE(find(equal, EquilibriumKind::Interior));
  CHECK(find(equal, EquilibriumKind::PreyOnly)->stability == Stability::NonHyperbolic);

  const auto below = equilibria(validate_params(1, 2, 1));
  CHECK(below.size() == 2);
  CHECK_FALSE(find(below, EquilibriumKind::Interior));
  CHECK(find(below, EquilibriumKind::PreyOnly)->stability == Stability::Stable);
}

TEST_CASE("interior point is a zero of the vector field for random parameters") {
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> unit(1e-3, 5.0);
  for (int n = 0; n < 1000; ++n) {
    const double a = unit(rng);
    const double b = unit(rng);
    if (!(b > a)) continue;
    const ModelParams p = validate_params(unit(rng), a, b);
    const auto eq = interior_point(p);
    REQUIRE(eq);
    const auto f = rhs_raw(p, *eq);
    CHECK(std::abs(f[0]) <= 1e-12);
    CHECK(std::abs(f[1]) <= 1e-12);
  }
}

TEST_CASE("jacobian") {
  SUBCASE("prey-only point") {
    for (const auto& p : {kBase, validate_params(2.0, 1.5, 0.3)}) {
      const Matrix2 j = jacobian(p, {1, 0});
      CHECK(j[0][0] == -p.r());
      CHECK(j[0][1] == -1.0);
      CHECK(j[1][0] == 0.0);
      CHECK(j[1][1] == p.beta() - p.alpha());
      const auto ev = eigenvalues(j);
      CHECK(ev[0].imag() == 0.0);
      const double lo = std::min(ev[0].real(), ev[1].real());
      const double hi = std::max(ev[0].real(), ev[1].real());
      CHECK(lo == doctest::Approx(std::min(-p.r(), p.beta() - p.alpha())).epsilon(1e-15));
      CHECK(hi == doctest::Approx(std::max(-p.r(), p.beta() - p.alpha())).epsilon(1e-15));
      CHECK(classify_by_eigenvalues(j) == (p.beta() > p.alpha() ? Stability::Saddle : Stability::Stable));
    }
  }

  SUBCASE("closed form matches central differences at the interior point") {
    const State eq = *interior_point(kBase);
    const Matrix2 exact = jacobian(kBase, eq);
    const Matrix2 fd = oracle::fd_jacobian(kBase, eq, 1e-6);
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < 2; ++k) CHECK(std::abs(exact[i][k] - fd[i][k]) <= 1e-6);
    }
    const auto ev = eigenvalues(exact);
    CHECK(ev[0].real() < 0.0);
    CHECK(ev[1].real() < 0.0);
  }

  SUBCASE("rejects the prey-free axis") {
    CHECK_THROWS_AS(jacobian(kBase, {0, 0.5}), ParameterError);
    CHECK_THROWS_AS(jacobian(kBase, {-1, 0.5}), ParameterError);
  }
}

TEST_CASE("classify_interior") {
  SUBCASE("reference parameters are stable") {
    const auto c = classify_interior(kBase);
    CHECK(c.ratio == doctest::Approx(0.61538).epsilon(1e-5));
    CHECK(kInverseSqrt3 == doctest::Approx(0.57735).epsilon(1e-5));
    CHECK(kInverseSqrt3 == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-16));
    CHECK(c.criterion == Stability::Stable);
    CHECK(c.eigen == Stability::Stable);
  }
  SUBCASE("alpha/beta below 1/sqrt(3) is unstable") {
    const auto c = classify_interior(validate_params(1, 0.4, 1));
    CHECK(c.criterion == Stability::Unstable);
    CHECK(c.eigen == Stability::Unstable);
  }
  SUBCASE("boundary is reported as non-hyperbolic") {
    const auto c = classify_interior(validate_params(1, kInverseSqrt3, 1));
    CHECK(c.criterion == Stability::NonHyperbolic);
  }
  SUBCASE("requires an interior point") {
    CHECK_THROWS_AS(classify_interior(validate_params(1, 1, 1)), ParameterError);
    CHECK_THROWS_AS(classify_interior(validate_params(1, 2, 1)), ParameterError);
  }
  SUBCASE("criterion and eigenvalues agree away from the boundary") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 5.0);
    int tested = 0;
    int disagreements = 0;
    while (tested < 1000) {
      const double r = unit(rng), a = unit(rng), b = unit(rng);
      if (r <= 0 || a <= 0 || !(b > a) || std::abs(a / b - kInverseSqrt3) <= 1e-3) continue;
      ++tested;
      if (!classify_interior(validate_params(r, a, b)).agree()) ++disagreements;
    }
    CHECK(disagreements == 0);
  }
}

TEST_CASE("extinction_bound") {
  SUBCASE("worked example") {
    const auto b = extinction_bound(kBase, {0.4, 1.0});
    CHECK(std::abs(b.k_value - 0.82219) <= 1e-5);
    CHECK(b.sufficient);
    REQUIRE(b.t_upper);
    // Closed form re-evaluated in quad precision: 2.6570031390037...
    CHECK(std::abs(*b.t_upper - static_cast<double>(oracle::t_upper(0.5, 0.4, 0.4, 1.0))) <= 1e-14);
    CHECK(*b.t_upper == doctest::Approx(2.657003139).epsilon(1e-9));
  }
  SUBCASE("prey-free start") {
    const auto b = extinction_bound(kBase, {0.0, 0.7});
    CHECK(b.k_value == 0.0);
    CHECK(b.sufficient);
    REQUIRE(b.t_upper);
    CHECK(*b.t_upper == 0.0);
    const auto both_zero = extinction_bound(kBase, {0.0, 0.0});
    CHECK(both_zero.sufficient);
    CHECK_FALSE(both_zero.t_upper);
  }
  SUBCASE("equality is sufficient but has no finite-time bound") {
    const double k = k_threshold(kBase, 0.4);
    const auto b = extinction_bound(kBase, {0.4, k});
    CHECK(b.sufficient);
    CHECK_FALSE(b.t_upper);
  }
  SUBCASE("below threshold") {
    const auto b = extinction_bound(kBase, {0.4, 0.3});
    CHECK_FALSE(b.sufficient);
    CHECK_FALSE(b.t_upper);
  }
  SUBCASE("K is monotone in x0, r and alpha") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(1e-3, 5.0);
    for (int n = 0; n < 500; ++n) {
      const double r = unit(rng), a = unit(rng), x = unit(rng), d = unit(rng);
      const ModelParams p = validate_params(r, a, 1.0);
      CHECK(k_threshold(p, x) < k_threshold(p, x + d));
      CHECK(k_threshold(p, x) < k_threshold(validate_params(r + d, a, 1.0), x));
      CHECK(k_threshold(p, x) < k_threshold(validate_params(r, a + d, 1.0), x));
    }
  }
  SUBCASE("t_upper is a root of the envelope") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(1e-2, 3.0);
    for (int n = 0; n < 500; ++n) {
      const ModelParams p = validate_params(unit(rng), unit(rng), unit(rng));
      const double x0 = unit(rng) / 3.0;
      const double y0 = k_threshold(p, x0) * (1.0 + unit(rng));
      const auto b = extinction_bound(p, {x0, y0});
      REQUIRE(b.t_upper);
      CHECK(*b.t_upper > 0.0);
      CHECK(std::isfinite(*b.t_upper));
      CHECK(std::abs(envelope(p, {x0, y0}, *b.t_upper)) <= 1e-10);
    }
  }
}

TEST_CASE("envelope") {
  const State s0{0.4, 1.0};
  CHECK(envelope(kBase, s0, 0.0) == std::sqrt(0.4));

  const double limit = std::sqrt(0.4) - 1.0 / (0.5 + 0.8);
  CHECK(envelope(kBase, s0, 200.0) == doctest::Approx(limit).epsilon(1e-15));
  CHECK(limit < 0.0);
  CHECK(std::sqrt(0.4) - 0.3 / 1.3 > 0.0);  // (0.4, 0.3): not sufficient, limit stays positive

  const double quad = static_cast<double>(oracle::envelope(0.5, 0.4, 0.4, 1.0, 1.0));
  CHECK(std::abs(envelope(kBase, s0, 1.0) - quad) <= 1e-14);
}
