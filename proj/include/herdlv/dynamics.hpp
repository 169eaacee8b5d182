#pragma once

#include <array>

#include "herdlv/model.hpp"

namespace herdlv {

/// (u, y) with u = sqrt(x). In these coordinates the vector field is
/// polynomial and prey extinction is the transversal crossing u = 0.
struct RegularizedState {
  double u = 0.0;
  double y = 0.0;
};

RegularizedState to_regularized(const State& s);
/// x = u^2. Negative u (only seen inside event refinement) maps to x = 0.
State to_state(const RegularizedState& z);

/// (dx/dt, dy/dt) of the original model. Throws ParameterError for x < 0.
std::array<double, 2> rhs_raw(const ModelParams& p, const State& s);

/// (du/dt, dy/dt) = ((r/2) u (1 - u^2) - y/2, -alpha y + beta y u).
/// Defined for all real u.
inline std::array<double, 2> rhs_regularized(const ModelParams& p, const RegularizedState& z) noexcept {
  return {0.5 * p.r() * z.u * (1.0 - z.u * z.u) - 0.5 * z.y, z.y * (p.beta() * z.u - p.alpha())};
}

}  // namespace herdlv
