#include "edmstab/sirs.hpp"

#include "edmstab/errors.hpp"

#include <cmath>
#include <string>

namespace edmstab {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("invalid SIRS parameters: " + what);
}

}  // namespace

void SirsParams::validate() const {
  for (double v : {delta, zeta, theta, gamma, omega_bar})
    require(std::isfinite(v), "rates must be finite");
  require(zeta >= 0.0 && theta >= 0.0, "birth and natural death rates must be nonnegative");
  require(growth() > 0.0, "g = theta - zeta must be positive");
  require(sigma_bar() > 0.0 && sigma() > 0.0, "sigma_bar and sigma must be positive");
  require(omega() > 0.0, "omega = g + omega_bar must be positive");
  require(delta > 0.0 && delta < std::min(omega(), gamma), "need 0 < delta < min(omega, gamma)");
  require(Q.rows() > 0 && Q.rows() == Q.cols(), "Q must be square and nonempty");
  require(Q.allFinite() && (Q.array() > 0.0).all(), "Q must have positive entries");
  const auto lowest = minimize_quadratic_on_simplex(Q);
  require(lowest && lowest->objective > sigma(),
          "x'Qx must exceed sigma on the whole simplex (min " +
              std::to_string(lowest ? lowest->objective : 0.0) + ", sigma " +
              std::to_string(sigma()) + ")");
}

SirsParams SirsParams::example1() {
  SirsParams p;
  p.delta = 0.005;
  p.zeta = 0.0;
  p.theta = 0.0002;
  p.gamma = 0.1;
  p.omega_bar = 0.011;
  p.Q.resize(3, 3);
  p.Q << 0.13, 0.18, 0.20,  //
      0.16, 0.22, 0.23,     //
      0.17, 0.28, 0.50;
  return p;
}

double transmission_rate(const Matrix& Q, const Vector& x) { return x.dot(Q * x); }

Vector transmission_gradient(const Matrix& Q, const Vector& x) {
  return (Q + Q.transpose()) * x;
}

EndemicEquilibrium endemic_equilibrium(const SirsParams& params, double B) {
  const double delta = params.delta;
  const double gamma = params.gamma;
  const double sigma = params.sigma();
  const double omega = params.omega();
  if (!(B > sigma)) {
    throw ModelInconsistency("transmission rate " + std::to_string(B) +
                             " does not exceed sigma; no endemic equilibrium");
  }
  // I* is the smaller root of delta (B - delta) I^2 - b I + omega (B - sigma) = 0.
  // The discriminant is b^2 - 4 delta omega (B - delta)(B - sigma).
  const double b = gamma * B + omega * (B - delta) + delta * (B - sigma);
  const double disc = b * b - 4.0 * delta * omega * (B - delta) * (B - sigma);
  if (disc < 0.0) throw ModelInconsistency("negative discriminant for the endemic equilibrium");
  // Equivalent to (b - sqrt(disc)) / (2 delta (B - delta)) without the cancellation.
  const double I = 2.0 * omega * (B - sigma) / (b + std::sqrt(disc));
  if (!(I > 0.0)) throw ModelInconsistency("nonpositive endemic infected fraction");
  const double R = (1.0 - sigma / B) - (1.0 - delta / B) * I;
  const double a = B / (gamma + delta * R);
  return {I, R, a};
}

SirsState sirs_equilibrium(const SirsParams& params, const Vector& x) {
  const auto eq = endemic_equilibrium(params, transmission_rate(params.Q, x));
  return {eq.I, eq.R};
}

Vector sirs_vector_field(const SirsParams& params, const SirsState& y, double B) {
  const double S = 1.0 - y.I - y.R;
  Vector f(2);
  f(0) = (B * S + params.delta * y.I - params.sigma()) * y.I;
  f(1) = params.gamma * y.I - params.omega() * y.R + params.delta * y.R * y.I;
  return f;
}

Vector sirs_vector_field(const SirsParams& params, const SirsState& y, const Vector& x) {
  return sirs_vector_field(params, y, transmission_rate(params.Q, x));
}

SirsState sirs_equilibrium_newton(const SirsParams& params, double B, SirsState guess, double tol,
                                  int max_iter) {
  const double delta = params.delta;
  SirsState y = guess;
  for (int it = 0; it < max_iter; ++it) {
    const Vector f = sirs_vector_field(params, y, B);
    Eigen::Matrix2d J;
    J(0, 0) = B * (1.0 - y.I - y.R) + delta * y.I - params.sigma() + y.I * (delta - B);
    J(0, 1) = -B * y.I;
    J(1, 0) = params.gamma + delta * y.R;
    J(1, 1) = -params.omega() + delta * y.I;
    const Eigen::Vector2d step = J.fullPivLu().solve(Eigen::Vector2d(f(0), f(1)));
    // Damp steps that would cross I = 0, where the disease-free root lives.
    double scale = 1.0;
    while (y.I - scale * step(0) <= 0.0 && scale > 1e-8) scale *= 0.5;
    y.I -= scale * step(0);
    y.R -= scale * step(1);
    if (step.lpNorm<Eigen::Infinity>() * scale < tol) break;
  }
  return y;
}

double sirs_lyapunov(const SirsParams& params, const SirsState& y, double B) {
  if (!(y.I > 0.0)) throw DomainError("SIRS Lyapunov function needs I > 0");
  const auto eq = endemic_equilibrium(params, B);
  const double dr = y.R - eq.R;
  // (I - I*) + I* ln(I*/I) written as I* (d - ln(1 + d)) to keep precision near I*.
  const double d = (y.I - eq.I) / eq.I;
  return eq.I * (d - std::log1p(d)) + 0.5 * eq.a * dr * dr;
}

Vector sirs_lyapunov_grad_y(const SirsParams& params, const SirsState& y, double B) {
  if (!(y.I > 0.0)) throw DomainError("SIRS Lyapunov function needs I > 0");
  const auto eq = endemic_equilibrium(params, B);
  Vector g(2);
  g(0) = 1.0 - eq.I / y.I;
  g(1) = eq.a * (y.R - eq.R);
  return g;
}

double sirs_lyapunov_dB(const SirsParams& params, const SirsState& y, double B, double h,
                        GradientDiagnostics* diag) {
  double step = h * (1.0 + std::abs(B));
  while (B - 2.0 * step <= params.sigma()) {
    step *= 0.5;
    if (diag) {
      ++diag->shrunk_steps;
      diag->warnings.emplace_back("dU/dB step shrunk near the eradication threshold");
    }
    if (step < 1e-300) throw DomainError("transmission rate at the eradication threshold");
  }
  auto u = [&](double b) { return sirs_lyapunov(params, y, b); };
  // Fourth-order central stencil.
  return (8.0 * (u(B + step) - u(B - step)) - (u(B + 2.0 * step) - u(B - 2.0 * step))) /
         (12.0 * step);
}

SirsSystem::SirsSystem(SirsParams params) : params_(std::move(params)) { params_.validate(); }

bool SirsSystem::valid_state(const Vector& y) const {
  return y.size() == 2 && y.allFinite() && y(0) > 0.0 && y(0) <= 1.0 && y(1) >= 0.0 &&
         y(0) + y(1) <= 1.0;
}

bool SirsSystem::valid_parameters(const Vector& x) const {
  return x.size() == params_.Q.rows() && transmission_rate(params_.Q, x) > params_.sigma();
}

Vector SirsSystem::field(const Vector& y, const Vector& x) const {
  return sirs_vector_field(params_, SirsState::from(y), x);
}

Vector SirsSystem::equilibrium(const Vector& x) const {
  return sirs_equilibrium(params_, x).vec();
}

double SirsSystem::lyapunov(const Vector& y, const Vector& x) const {
  return sirs_lyapunov(params_, SirsState::from(y), transmission_rate(params_.Q, x));
}

Vector SirsSystem::lyapunov_grad_y(const Vector& y, const Vector& x) const {
  return sirs_lyapunov_grad_y(params_, SirsState::from(y), transmission_rate(params_.Q, x));
}

bool SirsSystem::enforce_domain(Vector& y) const {
  bool moved = false;
  if (y(0) < kInfectedFloor) {
    y(0) = kInfectedFloor;
    moved = true;
  }
  if (y(0) > 1.0) {
    y(0) = 1.0;
    moved = true;
  }
  if (y(1) < 0.0) {
    y(1) = 0.0;
    moved = true;
  }
  if (y(0) + y(1) > 1.0) {
    y(1) = 1.0 - y(0);
    moved = true;
  }
  return moved;
}

Vector SirsSystem::grad_x_lyapunov(const Vector& y, const Vector& x, double h,
                                   GradientDiagnostics* diag) const {
  const double B = transmission_rate(params_.Q, x);
  const double dU = sirs_lyapunov_dB(params_, SirsState::from(y), B, h, diag);
  return dU * transmission_gradient(params_.Q, x);
}

}  // namespace edmstab
