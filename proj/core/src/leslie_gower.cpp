#include "edmstab/leslie_gower.hpp"

#include "edmstab/errors.hpp"

#include <cmath>
#include <string>

namespace edmstab {

void LeslieGowerParams::validate() const {
  if (!(a1 > 0.0) || !(a2 > 0.0) || !std::isfinite(a1) || !std::isfinite(a2))
    throw InvalidArgument("invalid Leslie-Gower parameters: a1 and a2 must be positive");
  const int n = strategies();
  if (n == 0 || z2.slope.size() != n || b1.slope.size() != n)
    throw InvalidArgument("invalid Leslie-Gower parameters: maps must share one dimension");
  for (int i = 0; i < n; ++i) {
    const Vector e = Vector::Unit(n, i);
    if (!(z1(e) > 0.0)) throw InvalidArgument("z1 must be positive at vertex " + std::to_string(i));
    if (!(z2(e) > 0.0)) throw InvalidArgument("z2 must be positive at vertex " + std::to_string(i));
    if (!(b1(e) >= 0.0))
      throw InvalidArgument("b1 must be nonnegative at vertex " + std::to_string(i));
  }
}

LeslieGowerState lg_equilibrium(const LeslieGowerParams& params, const Vector& x) {
  const double z1 = params.z1(x);
  const double z2 = params.z2(x);
  const double denom = params.a1 * z2 + params.a2 * params.b1(x);
  return {params.a2 * z1 / denom, z1 * z2 / denom};
}

Vector lg_vector_field(const LeslieGowerParams& params, const LeslieGowerState& y,
                       const Vector& x) {
  if (!(y.O > 0.0)) throw DomainError("Leslie-Gower field needs O > 0");
  Vector f(2);
  f(0) = (params.z1(x) - params.a1 * y.P - params.b1(x) * y.O) * y.O;
  f(1) = (params.z2(x) - params.a2 * y.P / y.O) * y.P;
  return f;
}

double lg_lyapunov(const LeslieGowerParams& params, const LeslieGowerState& y, const Vector& x) {
  if (!(y.O > 0.0) || !(y.P > 0.0)) throw DomainError("Leslie-Gower Lyapunov needs O, P > 0");
  const auto w = lg_equilibrium(params, x);
  const double ratio = params.a1 / params.a2;
  return std::log(y.O / w.O) + w.O / y.O + ratio * w.O * (std::log(y.P / w.P) + w.P / y.P) -
         ratio * w.O;
}

Vector lg_lyapunov_grad_y(const LeslieGowerParams& params, const LeslieGowerState& y,
                          const Vector& x) {
  if (!(y.O > 0.0) || !(y.P > 0.0)) throw DomainError("Leslie-Gower Lyapunov needs O, P > 0");
  const auto w = lg_equilibrium(params, x);
  const double ratio = params.a1 / params.a2;
  Vector g(2);
  g(0) = 1.0 / y.O - w.O / (y.O * y.O);
  g(1) = ratio * w.O * (1.0 / y.P - w.P / (y.P * y.P));
  return g;
}

LeslieGowerSystem::LeslieGowerSystem(LeslieGowerParams params) : params_(std::move(params)) {
  params_.validate();
}

bool LeslieGowerSystem::valid_state(const Vector& y) const {
  return y.size() == 2 && y.allFinite() && y(0) > 0.0 && y(1) > 0.0;
}

bool LeslieGowerSystem::valid_parameters(const Vector& x) const {
  return x.size() == strategies() && params_.z1(x) > 0.0 && params_.z2(x) > 0.0 &&
         params_.b1(x) >= 0.0;
}

Vector LeslieGowerSystem::field(const Vector& y, const Vector& x) const {
  return lg_vector_field(params_, LeslieGowerState::from(y), x);
}

Vector LeslieGowerSystem::equilibrium(const Vector& x) const {
  return lg_equilibrium(params_, x).vec();
}

double LeslieGowerSystem::lyapunov(const Vector& y, const Vector& x) const {
  return lg_lyapunov(params_, LeslieGowerState::from(y), x);
}

Vector LeslieGowerSystem::lyapunov_grad_y(const Vector& y, const Vector& x) const {
  return lg_lyapunov_grad_y(params_, LeslieGowerState::from(y), x);
}

bool LeslieGowerSystem::enforce_domain(Vector& y) const {
  bool moved = false;
  for (Eigen::Index i = 0; i < 2; ++i) {
    if (y(i) < kPopulationFloor) {
      y(i) = kPopulationFloor;
      moved = true;
    }
  }
  return moved;
}

}  // namespace edmstab
