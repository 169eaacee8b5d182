#include "herdlv/basin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "parallel.hpp"

namespace herdlv {

std::string to_string(UndeterminedReason reason) {
  switch (reason) {
    case UndeterminedReason::HorizonReached: return "horizon_reached";
    case UndeterminedReason::StepUnderflow: return "step_underflow";
    case UndeterminedReason::NonFinite: return "non_finite";
    case UndeterminedReason::PreyOnlyAttractor: return "prey_only_attractor";
    case UndeterminedReason::InitiallyExtinct: return "initially_extinct";
  }
  return "unknown";
}

std::string to_string(BracketFailure failure) {
  switch (failure) {
    case BracketFailure::LowerNotCoexistence: return "lower_not_coexistence";
    case BracketFailure::UpperNotExtinction: return "upper_not_extinction";
    case BracketFailure::Undetermined: return "undetermined";
  }
  return "unknown";
}

std::string outcome_name(const BasinVerdict& v) {
  if (is_coexistence(v)) return "coexistence";
  if (is_extinction(v)) return "extinction";
  return "undetermined";
}

BasinVerdict verdict_from(const Trajectory& traj) {
  const auto& terminal = traj.terminal();
  if (const auto* e = std::get_if<ExtinctionAt>(&terminal)) {
    if (e->t_ext > 0.0) return FiniteTimeExtinction{e->t_ext};
    return Undetermined{UndeterminedReason::InitiallyExtinct};
  }
  if (const auto* c = std::get_if<ConvergedTo>(&terminal)) {
    if (c->target.kind == EquilibriumKind::Interior) return Coexistence{};
    return Undetermined{UndeterminedReason::PreyOnlyAttractor};
  }
  return Undetermined{UndeterminedReason::HorizonReached};
}

BasinVerdict classify_ic(const ModelParams& p, const State& s0, const IntegratorConfig& cfg) {
  try {
    return verdict_from(integrate(p, s0, cfg));
  } catch (const IntegrationFailure& failure) {
    return Undetermined{failure.kind() == IntegrationFailure::Kind::StepUnderflow ? UndeterminedReason::StepUnderflow
                                                                                  : UndeterminedReason::NonFinite};
  }
}

namespace {

void require_stable_interior(const ModelParams& p) {
  if (!interior_point(p) || classify_interior(p).criterion != Stability::Stable) {
    throw RegimeError(fmt::format(
        "separatrix estimation needs a stable interior equilibrium (alpha/beta = {} must exceed 1/sqrt(3) = {})",
        p.alpha() / p.beta(), kInverseSqrt3));
  }
}

SeparatrixResult scan_line(const ModelParams& p, double x, const SeparatrixOptions& opts,
                           const IntegratorConfig& cfg) {
  SeparatrixResult out;
  out.x = x;
  double lo = opts.y_lo_init;
  double hi = opts.y_max.value_or(1.5 * k_threshold(p, x));

  const BasinVerdict lower = classify_ic(p, {x, lo}, cfg);
  const BasinVerdict upper = classify_ic(p, {x, hi}, cfg);
  out.lower_outcome = outcome_name(lower);
  out.upper_outcome = outcome_name(upper);
  if (!is_coexistence(lower)) {
    out.failure = BracketFailure::LowerNotCoexistence;
    return out;
  }
  if (!is_extinction(upper)) {
    out.failure = BracketFailure::UpperNotExtinction;
    return out;
  }
  while (hi - lo > opts.bracket_tol) {
    const double mid = 0.5 * (lo + hi);
    const BasinVerdict v = classify_ic(p, {x, mid}, cfg);
    if (is_coexistence(v)) {
      lo = mid;
    } else if (is_extinction(v)) {
      hi = mid;
    } else {
      out.failure = BracketFailure::Undetermined;
      return out;
    }
  }
  out.point = SeparatrixPoint{x, lo, hi, 0.5 * (lo + hi)};
  return out;
}

}  // namespace

std::vector<SeparatrixResult> separatrix_scan(const ModelParams& p, const std::vector<double>& x_values,
                                              const SeparatrixOptions& opts, const IntegratorConfig& cfg) {
  require_stable_interior(p);
  cfg.validate();
  for (double x : x_values) {
    if (!(x > 0.0 && x <= 1.0)) throw ParameterError(fmt::format("scan line x = {} outside (0, 1]", x));
  }
  if (!(opts.bracket_tol > 0.0)) throw ParameterError("bracket_tol must be > 0");
  if (!(opts.y_lo_init > 0.0)) throw ParameterError("y_lo_init must be > 0");
  if (opts.y_max && !(*opts.y_max > 0.0)) throw ParameterError("y_max must be > 0");

  std::vector<SeparatrixResult> results(x_values.size());
  detail::parallel_for(x_values.size(), opts.workers,
                       [&](std::size_t i) { results[i] = scan_line(p, x_values[i], opts, cfg); });
  return results;
}

std::vector<MonotonicityAudit> audit_monotonicity(const ModelParams& p, const std::vector<SeparatrixPoint>& points,
                                                  double y_cap, const IntegratorConfig& cfg, unsigned workers) {
  std::vector<MonotonicityAudit> out(points.size());
  detail::parallel_for(points.size(), workers, [&](std::size_t i) {
    const auto& pt = points[i];
    out[i].x = pt.x;
    out[i].below_coexists = is_coexistence(classify_ic(p, {pt.x, 0.5 * pt.y_crit}, cfg));
    out[i].above_extinct = is_extinction(classify_ic(p, {pt.x, std::min(2.0 * pt.y_crit, y_cap)}, cfg));
  });
  return out;
}

BasinGrid::BasinGrid(Region region, std::size_t nx, std::size_t ny)
    : region_(region), nx_(nx), ny_(ny), cells_(nx * ny, Undetermined{}) {
  if (nx == 0 || ny == 0) throw ParameterError("grid resolution must be at least 1 in each direction");
  if (!(region.x_min >= 0.0) || !(region.y_min >= 0.0) || !(region.x_max >= region.x_min) ||
      !(region.y_max >= region.y_min) || !std::isfinite(region.x_max) || !std::isfinite(region.y_max)) {
    throw ParameterError(fmt::format("invalid region [{}, {}] x [{}, {}]", region.x_min, region.x_max,
                                     region.y_min, region.y_max));
  }
}

State BasinGrid::initial_condition(std::size_t i, std::size_t j) const {
  auto coord = [](double lo, double hi, std::size_t k, std::size_t n) {
    if (n == 1) return lo;
    if (k + 1 == n) return hi;
    return lo + static_cast<double>(k) * ((hi - lo) / static_cast<double>(n - 1));
  };
  return {coord(region_.x_min, region_.x_max, i, nx_), coord(region_.y_min, region_.y_max, j, ny_)};
}

BasinGrid grid_sweep(const ModelParams& p, const Region& region, std::size_t nx, std::size_t ny,
                     const IntegratorConfig& cfg, unsigned workers) {
  cfg.validate();
  BasinGrid grid(region, nx, ny);
  detail::parallel_for(nx * ny, workers, [&](std::size_t index) {
    const std::size_t i = index / ny;
    const std::size_t j = index % ny;
    grid.cell(i, j) = classify_ic(p, grid.initial_condition(i, j), cfg);
  });
  return grid;
}

namespace {

void observe(BoundCheck& check, double slack, double t, bool ok) {
  if (slack < check.worst_slack) {
    check.worst_slack = slack;
    check.worst_t = t;
  }
  if (!ok) check.passed = false;
}

}  // namespace

TheoremVerification verify_theorem_bounds(const ModelParams& p, const Trajectory& traj, double slack) {
  if (!(traj.params() == p)) {
    throw ParameterError("trajectory was integrated with different model parameters");
  }
  const State s0 = traj.initial();
  constexpr double inf = std::numeric_limits<double>::infinity();

  TheoremVerification out;
  out.predator_lower = {"predator_lower_bound", true, true, inf, 0.0};
  out.prey_upper = {"prey_upper_bound", true, true, inf, 0.0};
  out.envelope = {"envelope", true, true, inf, 0.0};
  out.extinction = {"extinction_time", false, true, 0.0, 0.0};

  const double x_cap = std::max(s0.x, 1.0);
  for (const auto& sample : traj.samples()) {
    const double t = sample.t;
    const auto& s = sample.state;

    const double y_floor = s0.y * std::exp(-p.alpha() * t);
    observe(out.predator_lower, s.y - y_floor, t, s.y >= y_floor * (1.0 - slack));

    observe(out.prey_upper, x_cap - s.x, t, s.x <= x_cap + slack);

    if (s.x > 0.0) {
      const double lhs = std::sqrt(s.x) * std::exp(-0.5 * p.r() * t);
      const double rhs = envelope(p, s0, t);
      observe(out.envelope, rhs - lhs, t, lhs <= rhs + slack);
    }
  }

  if (out.envelope.worst_slack == inf) {
    // No sample with x > 0.
    out.envelope.applicable = false;
    out.envelope.worst_slack = 0.0;
  }

  const auto bound = extinction_bound(p, s0);
  if (bound.t_upper) {
    out.extinction.applicable = true;
    const auto event = traj.extinction();
    if (!event) {
      out.extinction.passed = false;
      out.extinction.worst_slack = -inf;
    } else {
      out.extinction.worst_slack = *bound.t_upper - event->t_ext;
      out.extinction.worst_t = event->t_ext;
      out.extinction.passed = event->t_ext <= *bound.t_upper;
    }
  }
  return out;
}

}  // namespace herdlv
