#pragma once

#include "edmstab/exo_system.hpp"

namespace edmstab {

/// Normalized SIRS epidemic with population-dependent transmission
/// B(x) = x'Qx. Rates are per day.
struct SirsParams {
  double delta = 0.0;      // disease death rate
  double zeta = 0.0;       // natural death rate
  double theta = 0.0;      // birth rate
  double gamma = 0.0;      // recovery rate
  double omega_bar = 0.0;  // immunity waning plus natural death (psi + zeta)
  Matrix Q;                // pairwise transmission rates beta_ij

  double growth() const { return theta - zeta; }
  double sigma_bar() const { return gamma + zeta + delta; }
  double sigma() const { return growth() + sigma_bar(); }
  /// omega = g + omega_bar.
  double omega() const { return growth() + omega_bar; }

  /// Throws InvalidArgument naming the first violated invariant, including
  /// the requirement min over the simplex of x'Qx > sigma.
  void validate() const;

  /// The three-strategy disease of the worked example.
  static SirsParams example1();
};

struct SirsState {
  double I = 0.0;
  double R = 0.0;

  Vector vec() const { return (Vector(2) << I, R).finished(); }
  static SirsState from(const Vector& y) { return {y(0), y(1)}; }
};

/// Endemic equilibrium for a frozen transmission rate B, with the
/// quadratic weight a_B of the Lyapunov function.
struct EndemicEquilibrium {
  double I = 0.0;
  double R = 0.0;
  double a = 0.0;
};

double transmission_rate(const Matrix& Q, const Vector& x);
/// Gradient of x'Qx, i.e. (Q + Q')x.
Vector transmission_gradient(const Matrix& Q, const Vector& x);

/// Closed-form endemic equilibrium at transmission rate B > sigma.
/// Throws ModelInconsistency if B <= sigma or the discriminant is negative.
EndemicEquilibrium endemic_equilibrium(const SirsParams& params, double B);
SirsState sirs_equilibrium(const SirsParams& params, const Vector& x);

/// Newton solve of f(y; B) = 0 from `guess`; independent of the closed form.
SirsState sirs_equilibrium_newton(const SirsParams& params, double B, SirsState guess,
                                  double tol = 1e-14, int max_iter = 100);

Vector sirs_vector_field(const SirsParams& params, const SirsState& y, double B);
Vector sirs_vector_field(const SirsParams& params, const SirsState& y, const Vector& x);

/// U~(I, R; B). Throws DomainError for I <= 0.
double sirs_lyapunov(const SirsParams& params, const SirsState& y, double B);
Vector sirs_lyapunov_grad_y(const SirsParams& params, const SirsState& y, double B);

/// dU~/dB at fixed (I, R) by central difference with step h (1 + |B|),
/// shrunk when B - step would reach the eradication threshold.
double sirs_lyapunov_dB(const SirsParams& params, const SirsState& y, double B, double h,
                        GradientDiagnostics* diag = nullptr);

inline constexpr double kInfectedFloor = 1e-12;

class SirsSystem final : public ExoSystem {
 public:
  explicit SirsSystem(SirsParams params);

  const SirsParams& params() const noexcept { return params_; }

  std::string_view name() const override { return "sirs"; }
  int state_dim() const override { return 2; }
  int strategies() const override { return static_cast<int>(params_.Q.rows()); }
  std::vector<std::string> state_labels() const override { return {"I", "R"}; }

  bool valid_state(const Vector& y) const override;
  bool valid_parameters(const Vector& x) const override;
  Vector field(const Vector& y, const Vector& x) const override;
  Vector equilibrium(const Vector& x) const override;
  double lyapunov(const Vector& y, const Vector& x) const override;
  Vector lyapunov_grad_y(const Vector& y, const Vector& x) const override;
  double lyapunov_minimum() const override { return 0.0; }
  bool enforce_domain(Vector& y) const override;

  /// Chain rule: dU~/dB (central difference) times (Q + Q')x.
  Vector grad_x_lyapunov(const Vector& y, const Vector& x, double h,
                         GradientDiagnostics* diag) const override;

 private:
  SirsParams params_;
};

}  // namespace edmstab
