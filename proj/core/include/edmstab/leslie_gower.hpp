#pragma once

#include "edmstab/exo_system.hpp"

namespace edmstab {

/// x -> offset + slope'x.
struct AffineMap {
  double offset = 0.0;
  Vector slope;

  double operator()(const Vector& x) const { return offset + slope.dot(x); }
  static AffineMap constant(int n, double value) { return {value, Vector::Zero(n)}; }
};

/// Host-parasite model with strategy-dependent growth rates z1, z2 and host
/// crowding b1. a1 and a2 are fixed.
struct LeslieGowerParams {
  double a1 = 1.0;
  double a2 = 1.0;
  AffineMap z1;
  AffineMap z2;
  AffineMap b1;

  int strategies() const { return static_cast<int>(z1.slope.size()); }
  /// Positivity of z1, z2 and nonnegativity of b1 at every vertex; by
  /// affinity they then hold on the whole simplex. Throws InvalidArgument.
  void validate() const;
};

struct LeslieGowerState {
  double O = 0.0;  // hosts
  double P = 0.0;  // parasites

  Vector vec() const { return (Vector(2) << O, P).finished(); }
  static LeslieGowerState from(const Vector& y) { return {y(0), y(1)}; }
};

LeslieGowerState lg_equilibrium(const LeslieGowerParams& params, const Vector& x);
/// Throws DomainError for O <= 0.
Vector lg_vector_field(const LeslieGowerParams& params, const LeslieGowerState& y, const Vector& x);
/// U(y; x) = ln(O/w1) + w1/O + (a1 w1/a2)(ln(P/w2) + w2/P) - (a1/a2) w1 with
/// w = y*(x). Its minimum value, attained at y*(x), is 1.
double lg_lyapunov(const LeslieGowerParams& params, const LeslieGowerState& y, const Vector& x);
Vector lg_lyapunov_grad_y(const LeslieGowerParams& params, const LeslieGowerState& y,
                          const Vector& x);

inline constexpr double kPopulationFloor = 1e-12;

class LeslieGowerSystem final : public ExoSystem {
 public:
  explicit LeslieGowerSystem(LeslieGowerParams params);

  const LeslieGowerParams& params() const noexcept { return params_; }

  std::string_view name() const override { return "leslie-gower"; }
  int state_dim() const override { return 2; }
  int strategies() const override { return params_.strategies(); }
  std::vector<std::string> state_labels() const override { return {"O", "P"}; }

  bool valid_state(const Vector& y) const override;
  bool valid_parameters(const Vector& x) const override;
  Vector field(const Vector& y, const Vector& x) const override;
  Vector equilibrium(const Vector& x) const override;
  double lyapunov(const Vector& y, const Vector& x) const override;
  Vector lyapunov_grad_y(const Vector& y, const Vector& x) const override;
  double lyapunov_minimum() const override { return 1.0; }
  bool enforce_domain(Vector& y) const override;

 private:
  LeslieGowerParams params_;
};

}  // namespace edmstab
