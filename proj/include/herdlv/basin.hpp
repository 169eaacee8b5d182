#pragma once

// Two-mode classification of initial conditions (coexistence vs finite-time
// prey extinction), separatrix estimation by bisection along vertical lines,
// grid sweeps and trajectory checks of the extinction-theorem inequalities.

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "herdlv/integrator.hpp"
#include "herdlv/model.hpp"

namespace herdlv {

class RegimeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Coexistence {};

struct FiniteTimeExtinction {
  double t_ext = 0.0;
};

enum class UndeterminedReason {
  HorizonReached,
  StepUnderflow,
  NonFinite,
  /// Converged to the prey-only state (predator dies out).
  PreyOnlyAttractor,
  /// x0 = 0: the prey is absent from the start.
  InitiallyExtinct,
};

std::string to_string(UndeterminedReason reason);

struct Undetermined {
  UndeterminedReason reason = UndeterminedReason::HorizonReached;
};

using BasinVerdict = std::variant<Coexistence, FiniteTimeExtinction, Undetermined>;

inline bool is_coexistence(const BasinVerdict& v) { return std::holds_alternative<Coexistence>(v); }
inline bool is_extinction(const BasinVerdict& v) { return std::holds_alternative<FiniteTimeExtinction>(v); }

/// "coexistence", "extinction" or "undetermined".
std::string outcome_name(const BasinVerdict& v);

BasinVerdict verdict_from(const Trajectory& traj);

BasinVerdict classify_ic(const ModelParams& p, const State& s0, const IntegratorConfig& cfg = {});

struct SeparatrixOptions {
  /// Lower bracket end; must classify as coexistence.
  double y_lo_init = 1e-3;
  /// Upper bracket end; defaults to 1.5 K(x) when unset.
  std::optional<double> y_max;
  double bracket_tol = 1e-4;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned workers = 0;
};

struct SeparatrixPoint {
  double x = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;
  double y_crit = 0.0;
};

enum class BracketFailure { LowerNotCoexistence, UpperNotExtinction, Undetermined };

std::string to_string(BracketFailure failure);

struct SeparatrixResult {
  double x = 0.0;
  std::optional<SeparatrixPoint> point;
  std::optional<BracketFailure> failure;
  /// Verdicts at the initial bracket ends (diagnostic).
  std::string lower_outcome;
  std::string upper_outcome;
};

/// Per-x bisection for the coexistence/extinction boundary. Requires the
/// stable-interior regime alpha/beta > 1/sqrt(3) (RegimeError otherwise)
/// and each x in (0, 1]. A failing line is reported, never fatal.
std::vector<SeparatrixResult> separatrix_scan(const ModelParams& p, const std::vector<double>& x_values,
                                              const SeparatrixOptions& opts = {},
                                              const IntegratorConfig& cfg = {});

struct MonotonicityAudit {
  double x = 0.0;
  bool below_coexists = false;  // at y_crit / 2
  bool above_extinct = false;   // at min(2 y_crit, cap)
  bool passed() const noexcept { return below_coexists && above_extinct; }
};

/// Re-classifies y_crit / 2 and min(2 y_crit, y_cap) on each bracketed line.
std::vector<MonotonicityAudit> audit_monotonicity(const ModelParams& p, const std::vector<SeparatrixPoint>& points,
                                                  double y_cap, const IntegratorConfig& cfg = {},
                                                  unsigned workers = 0);

struct Region {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
};

class BasinGrid {
 public:
  BasinGrid(Region region, std::size_t nx, std::size_t ny);

  const Region& region() const noexcept { return region_; }
  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }

  /// Initial condition of cell (i, j): (x_min + i dx, y_min + j dy).
  State initial_condition(std::size_t i, std::size_t j) const;

  const BasinVerdict& cell(std::size_t i, std::size_t j) const { return cells_.at(i * ny_ + j); }
  BasinVerdict& cell(std::size_t i, std::size_t j) { return cells_.at(i * ny_ + j); }
  /// Row-major storage, index i * ny + j.
  const std::vector<BasinVerdict>& cells() const noexcept { return cells_; }

 private:
  Region region_;
  std::size_t nx_;
  std::size_t ny_;
  std::vector<BasinVerdict> cells_;
};

/// Classifies every grid cell. The result does not depend on `workers`.
BasinGrid grid_sweep(const ModelParams& p, const Region& region, std::size_t nx, std::size_t ny,
                     const IntegratorConfig& cfg = {}, unsigned workers = 0);

struct BoundCheck {
  std::string name;
  bool applicable = true;
  bool passed = true;
  /// Smallest (bound - observed) seen; negative means violated.
  double worst_slack = 0.0;
  /// Time of the worst sample.
  double worst_t = 0.0;
};

struct TheoremVerification {
  BoundCheck predator_lower;  // y(t) >= y0 exp(-alpha t)
  BoundCheck prey_upper;      // x(t) <= max(x0, 1)
  BoundCheck envelope;        // sqrt(x) exp(-r t / 2) <= envelope(t) while x > 0
  BoundCheck extinction;      // K(x0) < y0  =>  t_ext <= t_upper
  bool all_passed() const noexcept {
    return predator_lower.passed && prey_upper.passed && envelope.passed && extinction.passed;
  }
};

inline constexpr double kBoundSlack = 1e-9;

/// Checks the extinction-theorem inequalities on every sample of `traj`.
/// Throws ParameterError when `traj` was integrated with other params.
TheoremVerification verify_theorem_bounds(const ModelParams& p, const Trajectory& traj,
                                          double slack = kBoundSlack);

}  // namespace herdlv
