#pragma once

// Forward integration of the model in regularized coordinates (u = sqrt(x))
// with an embedded Dormand-Prince 5(4) pair, extinction-event location and
// convergence detection.

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "herdlv/dynamics.hpp"
#include "herdlv/model.hpp"

namespace herdlv {

struct IntegratorConfig {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_min = 1e-14;
  double h_max = 1.0;
  /// The interior focus at typical parameters contracts at ~0.017 per unit
  /// time; a 1e-8 dwell needs t ~ 1100 from O(0.1) offsets.
  double t_max = 2000.0;
  /// Width of the bracket around the extinction time.
  double event_tol = 1e-10;
  /// Radius (Euclidean, in (x, y)) around an equilibrium counted as "at" it.
  double conv_tol = 1e-8;
  /// Time the state has to stay inside conv_tol before convergence is declared.
  double conv_window = 10.0;
  bool continue_after_extinction = false;

  /// Throws ParameterError when an invariant is violated.
  void validate() const;
};

struct Sample {
  double t = 0.0;
  State state;
};

struct ExtinctionAt {
  double t_ext = 0.0;
  /// Bracket [t_lo, t_hi] with u(t_lo) > 0 >= u(t_hi).
  double t_lo = 0.0;
  double t_hi = 0.0;
  /// du/dt = -y/2 at the event.
  double slope = 0.0;
};

struct ConvergedTo {
  Equilibrium target;
  /// Start of the dwell window that confirmed convergence.
  double t_conv = 0.0;
};

struct HorizonReached {
  double t_end = 0.0;
};

using Terminal = std::variant<ExtinctionAt, ConvergedTo, HorizonReached>;

struct IntegrationStats {
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;
  std::size_t event_iterations = 0;
};

/// One accepted step's continuous extension, u and y as quartic polynomials
/// in the step fraction.
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  std::array<std::array<double, 2>, 5> coeffs{};

  RegularizedState eval(double t) const noexcept;
};

class Trajectory {
 public:
  Trajectory(ModelParams params, State initial) : params_(params), initial_(initial) {}

  const ModelParams& params() const noexcept { return params_; }
  const State& initial() const noexcept { return initial_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const Terminal& terminal() const noexcept { return terminal_; }
  const IntegrationStats& stats() const noexcept { return stats_; }

  double t_final() const noexcept { return samples_.empty() ? 0.0 : samples_.back().t; }

  /// State at any t in [0, t_final()] from the step interpolants (4th order)
  /// or the exact prey-axis solution after extinction.
  State at(double t) const;

  /// n uniformly spaced samples over [0, t_final()] (n >= 2), end points
  /// included.
  std::vector<Sample> resample(std::size_t n) const;

  std::optional<ExtinctionAt> extinction() const;

 private:
  friend class TrajectoryBuilder;

  ModelParams params_;
  State initial_;
  std::vector<Sample> samples_;
  std::vector<DenseSegment> dense_;
  Terminal terminal_{HorizonReached{}};
  IntegrationStats stats_;
  /// Predator density at the event, used for the exact continuation.
  double y_at_extinction_ = 0.0;
};

class IntegrationFailure : public std::runtime_error {
 public:
  enum class Kind { StepUnderflow, NonFinite };

  IntegrationFailure(Kind kind, double t, const std::string& what)
      : std::runtime_error(what), kind_(kind), t_(t) {}

  Kind kind() const noexcept { return kind_; }
  double time() const noexcept { return t_; }

 private:
  Kind kind_;
  double t_;
};

std::string to_string(IntegrationFailure::Kind kind);

/// Adaptive integration from s0 until extinction, convergence to a
/// non-origin equilibrium, or cfg.t_max. Throws IntegrationFailure on step
/// underflow or a non-finite state, ParameterError on invalid input.
Trajectory integrate(const ModelParams& p, const State& s0, const IntegratorConfig& cfg = {});

/// Classical fixed-step RK4 on the regularized system; extinction by a
/// per-step sign check plus bisection to 1e-12. Independent of integrate()
/// and meant only for cross-validation. Keeps every `record_stride`-th step
/// plus the final state.
Trajectory integrate_raw_reference(const ModelParams& p, const State& s0, double dt, double t_end,
                                   std::size_t record_stride = 1);

}  // namespace herdlv
