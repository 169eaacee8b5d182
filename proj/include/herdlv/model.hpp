#pragma once

// Closed-form facts about the square-root functional-response predator-prey
// model
//
//   dx/dt = r x (1 - x) - y sqrt(x)
//   dy/dt = -alpha y + beta y sqrt(x)
//
// equilibria, linear stability and the finite-time extinction bounds.

#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace herdlv {

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The three positive rates of the model. Construction validates.
class ModelParams {
 public:
  ModelParams(double r, double alpha, double beta);

  double r() const noexcept { return r_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  double r_;
  double alpha_;
  double beta_;
};

ModelParams validate_params(double r, double alpha, double beta);

/// Population point: prey density x, predator density y.
struct State {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const State&, const State&) = default;
};

/// Throws ParameterError unless x, y are finite and non-negative.
void validate_state(const State& s);

enum class EquilibriumKind { Extinction, PreyOnly, Interior };
enum class Stability { Stable, Unstable, Saddle, NonHyperbolic, NotAnalyzable };

std::string to_string(EquilibriumKind kind);
std::string to_string(Stability stability);

struct Equilibrium {
  State point;
  EquilibriumKind kind;
  Stability stability;
};

/// (alpha/beta)^2, r alpha (beta^2 - alpha^2) / beta^3 when beta > alpha.
std::optional<State> interior_point(const ModelParams& p);

/// Extinction and prey-only always; interior exactly when beta > alpha.
/// The origin is never classified by linearization (the field is not
/// differentiable there).
std::vector<Equilibrium> equilibria(const ModelParams& p);

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Partial derivatives of the right-hand side at s. Requires s.x > 0.
Matrix2 jacobian(const ModelParams& p, const State& s);

/// Closed-form roots of the characteristic polynomial of a 2x2 matrix.
std::array<std::complex<double>, 2> eigenvalues(const Matrix2& m);

/// Hyperbolic classification from the eigenvalue signs. Real parts with
/// magnitude at or below `zero_tol` count as zero (NonHyperbolic).
Stability classify_by_eigenvalues(const Matrix2& m, double zero_tol = 1e-14);

inline constexpr double kInverseSqrt3 = 0.57735026918962576451;
inline constexpr double kNonHyperbolicBand = 1e-12;

struct InteriorClassification {
  double ratio = 0.0;  // alpha / beta
  Stability criterion = Stability::NotAnalyzable;
  Stability eigen = Stability::NotAnalyzable;
  std::array<std::complex<double>, 2> eigenvalues{};

  bool agree() const noexcept { return criterion == eigen; }
};

/// Local stability of the interior point by the alpha/beta > 1/sqrt(3)
/// criterion and, independently, by the Jacobian eigenvalues.
/// Throws ParameterError when beta <= alpha (no interior point).
InteriorClassification classify_interior(const ModelParams& p);

/// K(x) = (r + 2 alpha) sqrt(x).
double k_threshold(const ModelParams& p, double x);

struct ExtinctionBoundReport {
  double k_value = 0.0;
  /// K(x0) <= y0.
  bool sufficient = false;
  /// Root of the envelope; present only when K(x0) < y0 strictly.
  std::optional<double> t_upper;
};

ExtinctionBoundReport extinction_bound(const ModelParams& p, const State& s0);

/// Upper bound on sqrt(x(t)) exp(-r t / 2):
///   sqrt(x0) - (y0/2) / (r/2 + alpha) * (1 - exp(-(r/2 + alpha) t)).
double envelope(const ModelParams& p, const State& s0, double t);

}  // namespace herdlv
