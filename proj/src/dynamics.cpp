#include "herdlv/dynamics.hpp"

#include <cmath>

#include <fmt/format.h>

namespace herdlv {

RegularizedState to_regularized(const State& s) { return {std::sqrt(s.x), s.y}; }

State to_state(const RegularizedState& z) {
  const double u = z.u > 0.0 ? z.u : 0.0;
  return {u * u, z.y};
}

std::array<double, 2> rhs_raw(const ModelParams& p, const State& s) {
  if (!(s.x >= 0.0)) {
    throw ParameterError(fmt::format("rhs_raw requires x >= 0 (got {})", s.x));
  }
  const double root = std::sqrt(s.x);
  return {p.r() * s.x * (1.0 - s.x) - s.y * root, -p.alpha() * s.y + p.beta() * s.y * root};
}

}  // namespace herdlv
