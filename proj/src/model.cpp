#include "herdlv/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace herdlv {

namespace {

void require_positive(const char* name, double value) {
  if (!std::isfinite(value) || !(value > 0.0)) {
    throw ParameterError(fmt::format("{} must be > 0 and finite (got {})", name, value));
  }
}

}  // namespace

ModelParams::ModelParams(double r, double alpha, double beta) : r_(r), alpha_(alpha), beta_(beta) {
  require_positive("r", r);
  require_positive("alpha", alpha);
  require_positive("beta", beta);
}

ModelParams validate_params(double r, double alpha, double beta) { return ModelParams(r, alpha, beta); }

void validate_state(const State& s) {
  if (!std::isfinite(s.x) || s.x < 0.0) {
    throw ParameterError(fmt::format("x must be >= 0 and finite (got {})", s.x));
  }
  if (!std::isfinite(s.y) || s.y < 0.0) {
    throw ParameterError(fmt::format("y must be >= 0 and finite (got {})", s.y));
  }
}

std::string to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::Extinction: return "extinction";
    case EquilibriumKind::PreyOnly: return "prey_only";
    case EquilibriumKind::Interior: return "interior";
  }
  return "unknown";
}

std::string to_string(Stability stability) {
  switch (stability) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Saddle: return "saddle";
    case Stability::NonHyperbolic: return "non_hyperbolic";
    case Stability::NotAnalyzable: return "not_analyzable";
  }
  return "unknown";
}

std::optional<State> interior_point(const ModelParams& p) {
  const double a = p.alpha();
  const double b = p.beta();
  if (!(b > a)) return std::nullopt;
  const double ratio = a / b;
  return State{ratio * ratio, p.r() * a * (b * b - a * a) / (b * b * b)};
}

std::vector<Equilibrium> equilibria(const ModelParams& p) {
  std::vector<Equilibrium> out;
  out.push_back({State{0.0, 0.0}, EquilibriumKind::Extinction, Stability::NotAnalyzable});
  const State prey_only{1.0, 0.0};
  out.push_back({prey_only, EquilibriumKind::PreyOnly, classify_by_eigenvalues(jacobian(p, prey_only))});
  if (auto interior = interior_point(p)) {
    out.push_back({*interior, EquilibriumKind::Interior, classify_interior(p).criterion});
  }
  return out;
}

Matrix2 jacobian(const ModelParams& p, const State& s) {
  if (!(s.x > 0.0) || !std::isfinite(s.x) || !std::isfinite(s.y)) {
    throw ParameterError(
        fmt::format("jacobian requires x > 0 (got x = {}); the field is not differentiable on x = 0", s.x));
  }
  const double root = std::sqrt(s.x);
  const double half_y_over_root = s.y / (2.0 * root);
  return {{{p.r() * (1.0 - 2.0 * s.x) - half_y_over_root, -root},
           {p.beta() * half_y_over_root, -p.alpha() + p.beta() * root}}};
}

std::array<std::complex<double>, 2> eigenvalues(const Matrix2& m) {
  const double half_trace = 0.5 * (m[0][0] + m[1][1]);
  // (a - d)^2 / 4 + b c avoids cancellation in trace^2/4 - det.
  const double half_diff = 0.5 * (m[0][0] - m[1][1]);
  const double disc = half_diff * half_diff + m[0][1] * m[1][0];
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    return {std::complex<double>(half_trace + root, 0.0), std::complex<double>(half_trace - root, 0.0)};
  }
  const double imag = std::sqrt(-disc);
  return {std::complex<double>(half_trace, imag), std::complex<double>(half_trace, -imag)};
}

Stability classify_by_eigenvalues(const Matrix2& m, double zero_tol) {
  double scale = 1.0;
  for (const auto& row : m) {
    for (double v : row) scale = std::max(scale, std::abs(v));
  }
  const double tol = zero_tol * scale;
  const auto ev = eigenvalues(m);
  const double re0 = ev[0].real();
  const double re1 = ev[1].real();
  if (std::abs(re0) <= tol || std::abs(re1) <= tol) return Stability::NonHyperbolic;
  if (re0 < 0.0 && re1 < 0.0) return Stability::Stable;
  if (re0 > 0.0 && re1 > 0.0) return Stability::Unstable;
  return Stability::Saddle;
}

InteriorClassification classify_interior(const ModelParams& p) {
  const auto interior = interior_point(p);
  if (!interior) {
    throw ParameterError(fmt::format("interior equilibrium requires beta > alpha (alpha = {}, beta = {})",
                                     p.alpha(), p.beta()));
  }
  InteriorClassification out;
  out.ratio = p.alpha() / p.beta();
  if (std::abs(out.ratio - kInverseSqrt3) <= kNonHyperbolicBand) {
    out.criterion = Stability::NonHyperbolic;
  } else {
    out.criterion = out.ratio > kInverseSqrt3 ? Stability::Stable : Stability::Unstable;
  }
  const Matrix2 j = jacobian(p, *interior);
  out.eigenvalues = eigenvalues(j);
  out.eigen = classify_by_eigenvalues(j);
  return out;
}

double k_threshold(const ModelParams& p, double x) { return (p.r() + 2.0 * p.alpha()) * std::sqrt(x); }

ExtinctionBoundReport extinction_bound(const ModelParams& p, const State& s0) {
  validate_state(s0);
  ExtinctionBoundReport out;
  out.k_value = k_threshold(p, s0.x);
  out.sufficient = out.k_value <= s0.y;
  if (out.k_value < s0.y) {
    const double rate = 0.5 * p.r() + p.alpha();
    out.t_upper = -std::log1p(-out.k_value / s0.y) / rate;
  }
  return out;
}

double envelope(const ModelParams& p, const State& s0, double t) {
  const double rate = 0.5 * p.r() + p.alpha();
  return std::sqrt(s0.x) - (0.5 * s0.y / rate) * (-std::expm1(-rate * t));
}

}  // namespace herdlv
