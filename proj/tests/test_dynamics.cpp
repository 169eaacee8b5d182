#include <doctest.h>

#include <cmath>
#include <random>

#include "herdlv/dynamics.hpp"

using namespace herdlv;

namespace {
const ModelParams kBase = validate_params(0.5, 0.4, 0.65);
}

TEST_CASE("rhs_raw") {
  const auto at_interior = rhs_raw(kBase, *interior_point(kBase));
  CHECK(std::abs(at_interior[0]) <= 1e-12);
  CHECK(std::abs(at_interior[1]) <= 1e-12);

  const auto axis = rhs_raw(kBase, {0.0, 1.7});
  CHECK(axis[0] == 0.0);
  CHECK(axis[1] == -0.4 * 1.7);

  const auto prey_only = rhs_raw(kBase, {1.0, 0.0});
  CHECK(prey_only[0] == 0.0);
  CHECK(prey_only[1] == 0.0);

  CHECK_THROWS_AS(rhs_raw(kBase, {-1e-300, 1.0}), ParameterError);
}

TEST_CASE("rhs_regularized") {
  const auto axis = rhs_regularized(kBase, {0.0, 0.8});
  CHECK(axis[0] == -0.4);
  CHECK(axis[1] == -0.4 * 0.8);

  const auto prey_only = rhs_regularized(kBase, {1.0, 0.0});
  CHECK(prey_only[0] == 0.0);
  CHECK(prey_only[1] == 0.0);

  // Polynomial field: defined below the axis as well.
  const auto below = rhs_regularized(kBase, {-0.1, 0.5});
  CHECK(std::isfinite(below[0]));
  CHECK(below[0] < 0.0);
}

TEST_CASE("regularized field is the chain rule image of the raw field") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rate(0.05, 5.0);
  std::uniform_real_distribution<double> coord(1e-3, 2.0);
  for (int n = 0; n < 1000; ++n) {
    const ModelParams p = validate_params(rate(rng), rate(rng), rate(rng));
    const double u = coord(rng);
    const double y = coord(rng);
    const auto reg = rhs_regularized(p, {u, y});
    const auto raw = rhs_raw(p, {u * u, y});
    const double lhs = 2.0 * u * reg[0];
    CHECK(std::abs(lhs - raw[0]) <= 1e-12 * std::max({1.0, std::abs(raw[0]), std::abs(lhs)}));
    CHECK(std::abs(reg[1] - raw[1]) <= 1e-12 * std::max(1.0, std::abs(raw[1])));
  }
}

TEST_CASE("State and RegularizedState round trip") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> expo(-12.0, 1.0);
  for (int n = 0; n < 1000; ++n) {
    const State s{std::pow(10.0, expo(rng)), 0.3};
    const State back = to_state(to_regularized(s));
    CHECK(std::abs(back.x - s.x) <= 1e-15 * s.x);
    CHECK(back.y == s.y);
  }
  CHECK(to_state({-0.5, 1.0}).x == 0.0);
}
