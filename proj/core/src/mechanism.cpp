#include "edmstab/mechanism.hpp"

#include "edmstab/errors.hpp"

namespace edmstab {

MechanismGains::MechanismGains(double k1, double k2, double k3, PopulationState x_star,
                               Vector p_star, Vector costs)
    : k1_(k1), k2_(k2), k3_(k3), x_star_(std::move(x_star)), p_star_(std::move(p_star)),
      costs_(std::move(costs)) {
  if (!(k1_ > 0.0)) throw InvalidArgument("k1 must be positive");
  if (!(k2_ > 0.0)) throw InvalidArgument("k2 must be positive");
  if (!(k3_ > 0.0)) throw InvalidArgument("k3 must be positive");
  const auto n = x_star_.size();
  if (p_star_.size() != n) throw InvalidArgument("p_star must match the dimension of x_star");
  if (costs_.size() != n) throw InvalidArgument("costs must match the dimension of x_star");
  if (!p_star_.allFinite()) throw InvalidArgument("p_star must be finite");
  if (!costs_.allFinite() || (costs_.array() < 0.0).any())
    throw InvalidArgument("costs must be finite and nonnegative");
  if (!is_best_response(x_star_.values(), p_star_, kSimplexTol))
    throw InvalidArgument("x_star must be a best response to p_star");
}

Vector incentive_field(const MechanismGains& gains, const ExoSystem& system, const Vector& y,
                       const Vector& x, const Vector& q, double h, GradientDiagnostics* diag) {
  return -gains.k1() * grad_x_lyapunov(system, y, x, h, diag) -
         gains.k2() * (x - gains.x_star().values()) - gains.k3() * (q - gains.p_star());
}

RewardPayoff reward_and_payoff(const MechanismGains& gains, const Vector& q) {
  RewardPayoff out;
  out.reward = gains.costs() + q;
  out.payoff = q;
  return out;
}

double instantaneous_cost(const Vector& x, const Vector& reward) { return x.dot(reward); }

double cost_bound_g(const MechanismGains& gains, const ExoSystem& system, const Vector& y,
                    const Vector& x) {
  const Vector zero = Vector::Zero(x.size());
  const Vector g = gains.costs() + incentive_field(gains, system, y, x, zero) / gains.k3();
  return g.lpNorm<Eigen::Infinity>();
}

}  // namespace edmstab
