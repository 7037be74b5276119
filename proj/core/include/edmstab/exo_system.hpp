#pragma once

#include "edmstab/simplex.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace edmstab {

/// Default central-difference step for gradients with respect to x.
inline constexpr double kDefaultGradStep = 1e-6;

struct GradientDiagnostics {
  int shrunk_steps = 0;
  std::vector<std::string> warnings;
};

/// An exogenous system y' = f(y; x) driven by the population state x,
/// together with a Lyapunov function U(y; x) certifying y*(x) for frozen x.
///
/// Every method accepts x as a raw vector rather than a PopulationState:
/// integrator stages and finite differences evaluate slightly off the
/// simplex. Parameter maps must therefore be defined on a neighbourhood of
/// the simplex; valid_parameters() reports where they are.
class ExoSystem {
 public:
  virtual ~ExoSystem() = default;

  virtual std::string_view name() const = 0;
  virtual int state_dim() const = 0;
  virtual int strategies() const = 0;
  virtual std::vector<std::string> state_labels() const = 0;

  /// Membership of y in the state space.
  virtual bool valid_state(const Vector& y) const = 0;
  /// Whether the x-dependent parameters satisfy their invariants at x.
  virtual bool valid_parameters(const Vector& x) const = 0;

  virtual Vector field(const Vector& y, const Vector& x) const = 0;
  virtual Vector equilibrium(const Vector& x) const = 0;
  virtual double lyapunov(const Vector& y, const Vector& x) const = 0;
  virtual Vector lyapunov_grad_y(const Vector& y, const Vector& x) const = 0;
  /// Value of U at y = y*(x), the same for every x.
  virtual double lyapunov_minimum() const = 0;

  /// Clamps y onto the closure of the state space at the declared floors.
  /// Returns true if anything moved.
  virtual bool enforce_domain(Vector& y) const = 0;

  /// Gradient of U with respect to x at fixed y. The default is a central
  /// difference along each coordinate axis with step h, shrunk (and
  /// recorded in diag) when x +- h e_i leaves valid_parameters().
  virtual Vector grad_x_lyapunov(const Vector& y, const Vector& x, double h,
                                 GradientDiagnostics* diag) const;
};

/// Free-function form used by the mechanism and the tests.
inline Vector grad_x_lyapunov(const ExoSystem& system, const Vector& y, const Vector& x,
                              double h = kDefaultGradStep, GradientDiagnostics* diag = nullptr) {
  return system.grad_x_lyapunov(y, x, h, diag);
}

}  // namespace edmstab
