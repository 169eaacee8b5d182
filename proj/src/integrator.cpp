#include "herdlv/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace herdlv {

using Vec = std::array<double, 2>;

namespace {

// Dormand-Prince 5(4) tableau (Hairer, Norsett & Wanner, Table II.5.2).
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
// 5th-order weights minus embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense output.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

Vec rhs(const ModelParams& p, const Vec& z) { return rhs_regularized(p, RegularizedState{z[0], z[1]}); }

bool finite(const Vec& v) { return std::isfinite(v[0]) && std::isfinite(v[1]); }

struct DpStep {
  Vec z;
  Vec err;
  std::array<Vec, 7> k;
};

DpStep dp_step(const ModelParams& p, const Vec& z, const Vec& k1, double h) {
  DpStep s;
  auto& k = s.k;
  k[0] = k1;
  Vec w;
  for (int i = 0; i < 2; ++i) w[i] = z[i] + h * a21 * k[0][i];
  k[1] = rhs(p, w);
  for (int i = 0; i < 2; ++i) w[i] = z[i] + h * (a31 * k[0][i] + a32 * k[1][i]);
  k[2] = rhs(p, w);
  for (int i = 0; i < 2; ++i) w[i] = z[i] + h * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
  k[3] = rhs(p, w);
  for (int i = 0; i < 2; ++i) {
    w[i] = z[i] + h * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]);
  }
  k[4] = rhs(p, w);
  for (int i = 0; i < 2; ++i) {
    w[i] = z[i] + h * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] + a64 * k[3][i] + a65 * k[4][i]);
  }
  k[5] = rhs(p, w);
  for (int i = 0; i < 2; ++i) {
    s.z[i] = z[i] + h * (a71 * k[0][i] + a73 * k[2][i] + a74 * k[3][i] + a75 * k[4][i] + a76 * k[5][i]);
  }
  k[6] = rhs(p, s.z);
  for (int i = 0; i < 2; ++i) {
    s.err[i] = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] + e7 * k[6][i]);
  }
  return s;
}

double error_norm(const Vec& err, const Vec& z0, const Vec& z1, double rtol, double atol) {
  double sum = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double scale = atol + rtol * std::max(std::abs(z0[i]), std::abs(z1[i]));
    const double q = err[i] / scale;
    sum += q * q;
  }
  return std::sqrt(0.5 * sum);
}

DenseSegment make_segment(double t0, double h, const Vec& z0, const DpStep& s) {
  DenseSegment seg;
  seg.t0 = t0;
  seg.h = h;
  for (int i = 0; i < 2; ++i) {
    const double diff = s.z[i] - z0[i];
    const double bspl = h * s.k[0][i] - diff;
    seg.coeffs[0][i] = z0[i];
    seg.coeffs[1][i] = diff;
    seg.coeffs[2][i] = bspl;
    seg.coeffs[3][i] = diff - h * s.k[6][i] - bspl;
    seg.coeffs[4][i] = h * (d1 * s.k[0][i] + d3 * s.k[2][i] + d4 * s.k[3][i] + d5 * s.k[4][i] +
                            d6 * s.k[5][i] + d7 * s.k[6][i]);
  }
  return seg;
}

State exported(const Vec& z) {
  const double u = std::max(z[0], 0.0);
  return {u * u, std::max(z[1], 0.0)};
}

double distance(const State& a, const State& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

void IntegratorConfig::validate() const {
  auto positive = [](const char* name, double v) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw ParameterError(fmt::format("{} must be > 0 and finite (got {})", name, v));
    }
  };
  positive("rtol", rtol);
  positive("atol", atol);
  positive("h_init", h_init);
  positive("h_min", h_min);
  positive("h_max", h_max);
  positive("t_max", t_max);
  positive("event_tol", event_tol);
  positive("conv_tol", conv_tol);
  if (!(conv_window >= 0.0) || !std::isfinite(conv_window)) {
    throw ParameterError(fmt::format("conv_window must be >= 0 (got {})", conv_window));
  }
  if (h_min > h_max) {
    throw ParameterError(fmt::format("h_min ({}) must not exceed h_max ({})", h_min, h_max));
  }
}

std::string to_string(IntegrationFailure::Kind kind) {
  switch (kind) {
    case IntegrationFailure::Kind::StepUnderflow: return "step_underflow";
    case IntegrationFailure::Kind::NonFinite: return "non_finite";
  }
  return "unknown";
}

RegularizedState DenseSegment::eval(double t) const noexcept {
  const double theta = h > 0.0 ? (t - t0) / h : 0.0;
  const double theta1 = 1.0 - theta;
  Vec out;
  for (int i = 0; i < 2; ++i) {
    out[i] = coeffs[0][i] +
             theta * (coeffs[1][i] + theta1 * (coeffs[2][i] + theta * (coeffs[3][i] + theta1 * coeffs[4][i])));
  }
  return {out[0], out[1]};
}

std::optional<ExtinctionAt> Trajectory::extinction() const {
  if (const auto* e = std::get_if<ExtinctionAt>(&terminal_)) return *e;
  return std::nullopt;
}

State Trajectory::at(double t) const {
  if (!(t >= 0.0) || t > t_final()) {
    throw std::out_of_range(fmt::format("t = {} outside [0, {}]", t, t_final()));
  }
  if (t == 0.0) return initial_;
  if (const auto e = extinction(); e && t >= e->t_ext) {
    return {0.0, y_at_extinction_ * std::exp(-params_.alpha() * (t - e->t_ext))};
  }
  if (dense_.empty()) {
    throw std::logic_error("trajectory carries no interpolants");
  }
  auto it = std::upper_bound(dense_.begin(), dense_.end(), t,
                             [](double value, const DenseSegment& seg) { return value < seg.t0; });
  if (it != dense_.begin()) --it;
  const auto z = it->eval(t);
  return exported({z.u, z.y});
}

std::vector<Sample> Trajectory::resample(std::size_t n) const {
  if (n < 2) throw std::invalid_argument("resample needs at least 2 points");
  std::vector<Sample> out;
  out.reserve(n);
  const double t_end = t_final();
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      out.push_back({0.0, initial_});
    } else if (i + 1 == n) {
      out.push_back(samples_.back());
    } else {
      const double t = t_end * static_cast<double>(i) / static_cast<double>(n - 1);
      out.push_back({t, at(t)});
    }
  }
  return out;
}

class TrajectoryBuilder {
 public:
  TrajectoryBuilder(const ModelParams& p, const State& s0) : traj_(p, s0) {
    traj_.samples_.push_back({0.0, s0});
  }

  Trajectory& get() { return traj_; }
  IntegrationStats& stats() { return traj_.stats_; }

  void push(double t, const State& s) { traj_.samples_.push_back({t, s}); }
  void push_segment(const DenseSegment& seg) { traj_.dense_.push_back(seg); }
  void finish(Terminal terminal) { traj_.terminal_ = std::move(terminal); }

  void extinct(const ExtinctionAt& event, double y_at_event, bool continue_after, double t_max, double spacing) {
    if (event.t_ext > 0.0) push(event.t_ext, {0.0, y_at_event});
    traj_.terminal_ = event;
    traj_.y_at_extinction_ = y_at_event;
    if (!continue_after) return;
    const double alpha = traj_.params_.alpha();
    for (std::size_t k = 1;; ++k) {
      const double t = std::min(event.t_ext + static_cast<double>(k) * spacing, t_max);
      if (!(t > traj_.t_final())) break;
      push(t, {0.0, y_at_event * std::exp(-alpha * (t - event.t_ext))});
      if (t >= t_max) break;
    }
  }

 private:
  Trajectory traj_;
};

Trajectory integrate(const ModelParams& p, const State& s0, const IntegratorConfig& cfg) {
  validate_state(s0);
  cfg.validate();

  TrajectoryBuilder out(p, s0);
  auto& stats = out.stats();

  if (s0.x == 0.0) {
    // Already on the prey axis: the event has happened at t = 0.
    out.extinct(ExtinctionAt{0.0, 0.0, 0.0, -0.5 * s0.y}, s0.y, cfg.continue_after_extinction, cfg.t_max,
                cfg.h_max);
    return std::move(out.get());
  }

  std::vector<Equilibrium> targets;
  for (const auto& eq : equilibria(p)) {
    if (eq.kind != EquilibriumKind::Extinction) targets.push_back(eq);
  }
  std::ptrdiff_t inside = -1;
  double entered = 0.0;
  auto check_convergence = [&](double t, const State& s) -> std::optional<ConvergedTo> {
    std::ptrdiff_t now = -1;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (distance(s, targets[i].point) <= cfg.conv_tol) now = static_cast<std::ptrdiff_t>(i);
    }
    if (now < 0) {
      inside = -1;
      return std::nullopt;
    }
    if (now != inside) {
      inside = now;
      entered = t;
    }
    if (t - entered >= cfg.conv_window) return ConvergedTo{targets[static_cast<std::size_t>(now)], entered};
    return std::nullopt;
  };

  Vec z{std::sqrt(s0.x), s0.y};
  double t = 0.0;
  Vec k1 = rhs(p, z);
  ++stats.rhs_evaluations;
  double h = std::min({cfg.h_init, cfg.h_max, cfg.t_max});
  bool last_rejected = false;

  if (auto conv = check_convergence(t, s0)) {
    out.finish(*conv);
    return std::move(out.get());
  }

  while (t < cfg.t_max) {
    const double remaining = cfg.t_max - t;
    const bool clipped = h >= remaining;
    if (clipped) h = remaining;
    if (h < cfg.h_min && !clipped) {
      throw IntegrationFailure(IntegrationFailure::Kind::StepUnderflow, t,
                               fmt::format("step size {} fell below h_min {} at t = {}", h, cfg.h_min, t));
    }

    const DpStep step = dp_step(p, z, k1, h);
    stats.rhs_evaluations += 6;

    if (!finite(step.z) || !finite(step.err)) {
      ++stats.rejected_steps;
      last_rejected = true;
      h *= 0.2;
      if (h < cfg.h_min) {
        throw IntegrationFailure(IntegrationFailure::Kind::NonFinite, t,
                                 fmt::format("non-finite state near t = {}", t));
      }
      continue;
    }

    const double err = error_norm(step.err, z, step.z, cfg.rtol, cfg.atol);
    if (err > 1.0) {
      ++stats.rejected_steps;
      last_rejected = true;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    if (step.z[0] <= 0.0) {
      // The accepted step crosses u = 0; shrink it until the crossing is
      // bracketed to event_tol.
      double lo = 0.0;
      double hi = h;
      while (hi - lo > cfg.event_tol) {
        const double mid = 0.5 * (lo + hi);
        const DpStep trial = dp_step(p, z, k1, mid);
        stats.rhs_evaluations += 6;
        ++stats.event_iterations;
        if (trial.z[0] > 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double h_ext = 0.5 * (lo + hi);
      const DpStep final_step = dp_step(p, z, k1, h_ext);
      stats.rhs_evaluations += 6;
      ++stats.accepted_steps;
      out.push_segment(make_segment(t, h_ext, z, final_step));
      const double y_ext = std::max(final_step.z[1], 0.0);
      out.extinct(ExtinctionAt{t + h_ext, t + lo, t + hi, -0.5 * y_ext}, y_ext, cfg.continue_after_extinction,
                  cfg.t_max, cfg.h_max);
      return std::move(out.get());
    }

    ++stats.accepted_steps;
    out.push_segment(make_segment(t, h, z, step));
    t = clipped ? cfg.t_max : t + h;
    z = step.z;
    k1 = step.k[6];
    const State s = exported(z);
    out.push(t, s);

    if (auto conv = check_convergence(t, s)) {
      out.finish(*conv);
      return std::move(out.get());
    }

    double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    factor = std::clamp(factor, 0.2, last_rejected ? 1.0 : 5.0);
    last_rejected = false;
    h = std::min(h * factor, cfg.h_max);
  }

  out.finish(HorizonReached{t});
  return std::move(out.get());
}

namespace {

Vec rk4_step(const ModelParams& p, const Vec& z, double h) {
  const Vec k1 = rhs(p, z);
  const Vec k2 = rhs(p, {z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]});
  const Vec k3 = rhs(p, {z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]});
  const Vec k4 = rhs(p, {z[0] + h * k3[0], z[1] + h * k3[1]});
  return {z[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
          z[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

}  // namespace

Trajectory integrate_raw_reference(const ModelParams& p, const State& s0, double dt, double t_end,
                                   std::size_t record_stride) {
  validate_state(s0);
  if (!(s0.x > 0.0)) throw ParameterError("reference integrator requires x0 > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError(fmt::format("dt must be > 0 (got {})", dt));
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw ParameterError(fmt::format("t_end must be > 0 (got {})", t_end));
  }
  if (record_stride == 0) record_stride = 1;

  constexpr double kBisectionTol = 1e-12;
  TrajectoryBuilder out(p, s0);
  auto& stats = out.stats();
  Vec z{std::sqrt(s0.x), s0.y};
  double t = 0.0;

  for (std::size_t n = 1; t < t_end; ++n) {
    const double t_next = std::min(static_cast<double>(n) * dt, t_end);
    const double h = t_next - t;
    const Vec next = rk4_step(p, z, h);
    stats.rhs_evaluations += 4;
    if (!finite(next)) {
      throw IntegrationFailure(IntegrationFailure::Kind::NonFinite, t,
                               fmt::format("non-finite state near t = {}", t));
    }
    if (next[0] <= 0.0) {
      double lo = 0.0;
      double hi = h;
      while (hi - lo > kBisectionTol) {
        const double mid = 0.5 * (lo + hi);
        ++stats.event_iterations;
        stats.rhs_evaluations += 4;
        if (rk4_step(p, z, mid)[0] > 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double h_ext = 0.5 * (lo + hi);
      const double y_ext = std::max(rk4_step(p, z, h_ext)[1], 0.0);
      ++stats.accepted_steps;
      if (out.get().samples().back().t < t) out.push(t, exported(z));
      out.extinct(ExtinctionAt{t + h_ext, t + lo, t + hi, -0.5 * y_ext}, y_ext, false, t_end, dt);
      return std::move(out.get());
    }
    z = next;
    t = t_next;
    ++stats.accepted_steps;
    if (n % record_stride == 0 || t >= t_end) out.push(t, exported(z));
  }
  out.finish(HorizonReached{t});
  return std::move(out.get());
}

}  // namespace herdlv
