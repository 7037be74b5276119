#include "edmstab/exo_system.hpp"

#include "edmstab/errors.hpp"

#include <string>

namespace edmstab {

Vector ExoSystem::grad_x_lyapunov(const Vector& y, const Vector& x, double h,
                                  GradientDiagnostics* diag) const {
  if (!(h > 0.0)) throw InvalidArgument("gradient step must be positive");
  const auto n = x.size();
  Vector grad(n);
  Vector xp = x;
  Vector xm = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    double step = h;
    for (;;) {
      xp(i) = x(i) + step;
      xm(i) = x(i) - step;
      if (valid_parameters(xp) && valid_parameters(xm)) break;
      step *= 0.5;
      if (diag) {
        ++diag->shrunk_steps;
        diag->warnings.push_back("grad_x step shrunk along coordinate " + std::to_string(i));
      }
      if (step < 1e-14) throw DomainError("no valid finite-difference step around x");
    }
    grad(i) = (lyapunov(y, xp) - lyapunov(y, xm)) / (2.0 * step);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return grad;
}

}  // namespace edmstab
