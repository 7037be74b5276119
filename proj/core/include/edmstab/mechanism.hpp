#pragma once

#include "edmstab/exo_system.hpp"
#include "edmstab/simplex.hpp"

namespace edmstab {

/// Parameters of the dynamic payoff mechanism
///   q' = G(y, x, q) = -k1 grad_x U(y; x) - k2 (x - x*) - k3 (q - p*)
///   r  = H(y, x, q) = c + q.
class MechanismGains {
 public:
  /// Throws InvalidArgument unless k1, k2, k3 > 0, all vectors share the
  /// dimension of x*, c is finite and nonnegative, and x* is a best
  /// response to p*.
  MechanismGains(double k1, double k2, double k3, PopulationState x_star, Vector p_star,
                 Vector costs);

  double k1() const noexcept { return k1_; }
  double k2() const noexcept { return k2_; }
  double k3() const noexcept { return k3_; }
  const PopulationState& x_star() const noexcept { return x_star_; }
  const Vector& p_star() const noexcept { return p_star_; }
  const Vector& costs() const noexcept { return costs_; }
  int strategies() const noexcept { return x_star_.size(); }

  MechanismGains with_gains(double k1, double k2, double k3) const {
    return {k1, k2, k3, x_star_, p_star_, costs_};
  }

 private:
  double k1_;
  double k2_;
  double k3_;
  PopulationState x_star_;
  Vector p_star_;
  Vector costs_;
};

Vector incentive_field(const MechanismGains& gains, const ExoSystem& system, const Vector& y,
                       const Vector& x, const Vector& q, double h = kDefaultGradStep,
                       GradientDiagnostics* diag = nullptr);

struct RewardPayoff {
  Vector reward;  // r = c + q
  Vector payoff;  // p = r - c, identical to q
};

RewardPayoff reward_and_payoff(const MechanismGains& gains, const Vector& q);

/// Policy maker's spending rate x'r.
double instantaneous_cost(const Vector& x, const Vector& reward);

/// g(y, x) = || c + G(y, x, 0) / k3 ||_inf.
double cost_bound_g(const MechanismGains& gains, const ExoSystem& system, const Vector& y,
                    const Vector& x);

}  // namespace edmstab
