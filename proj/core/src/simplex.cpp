#include "edmstab/simplex.hpp"

#include "edmstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

namespace edmstab {

namespace {

// Sums within this many ulps of one (times n) count as exactly on the simplex.
constexpr double kRoundingUlps = 64.0;

bool on_simplex_to_rounding(const Vector& v) {
  if ((v.array() < 0.0).any()) return false;
  const double slack =
      kRoundingUlps * static_cast<double>(v.size()) * std::numeric_limits<double>::epsilon();
  return std::abs(v.sum() - 1.0) <= slack;
}

}  // namespace

bool all_finite(const Vector& v) { return v.allFinite(); }

bool on_simplex(const Vector& x, double tol) {
  if (x.size() == 0 || !x.allFinite()) return false;
  if ((x.array() < -tol).any()) return false;
  return std::abs(x.sum() - 1.0) <= tol;
}

PopulationState PopulationState::from(Vector x, double tol) {
  if (!on_simplex(x, tol)) {
    throw InvalidArgument("population state is not on the simplex (size " +
                          std::to_string(x.size()) + ", sum " + std::to_string(x.sum()) + ")");
  }
  x = x.cwiseMax(0.0);
  return PopulationState(std::move(x));
}

PopulationState PopulationState::vertex(int n, int i) {
  if (n <= 0 || i < 0 || i >= n) throw InvalidArgument("vertex index out of range");
  Vector x = Vector::Zero(n);
  x(i) = 1.0;
  return PopulationState(std::move(x));
}

PopulationState PopulationState::uniform(int n) {
  if (n <= 0) throw InvalidArgument("simplex dimension must be positive");
  return PopulationState(Vector::Constant(n, 1.0 / n));
}

PopulationState project_to_simplex(const Vector& v) {
  if (v.size() == 0) throw InvalidArgument("cannot project an empty vector");
  if (!v.allFinite()) throw InvalidArgument("cannot project a non-finite vector");
  if (on_simplex_to_rounding(v)) return PopulationState::from(v);

  const auto n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());

  // j = 0 always qualifies in exact arithmetic; start there so huge inputs
  // still get a finite shift.
  double cumulative = 0.0;
  double theta = u[0] - 1.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }

  Vector x = (v.array() - theta).cwiseMax(0.0);
  // Absorb the rounding residual in the largest entry so the output is on
  // the simplex to rounding (and hence a fixed point of this function).
  Eigen::Index imax = 0;
  x.maxCoeff(&imax);
  x(imax) += 1.0 - x.sum();
  return PopulationState::from(std::move(x));
}

bool BestResponseSet::contains(int i) const {
  return std::find(indices.begin(), indices.end(), i) != indices.end();
}

BestResponseSet best_response_set(const Vector& p, double tol) {
  if (p.size() == 0) throw InvalidArgument("best response of an empty payoff vector");
  if (!(tol >= 0.0)) throw InvalidArgument("best response tolerance must be nonnegative");
  if (!p.allFinite()) throw InvalidArgument("payoff vector must be finite");
  const double top = p.maxCoeff();
  BestResponseSet set;
  set.tol = tol;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) >= top - tol) set.indices.push_back(static_cast<int>(i));
  }
  return set;
}

bool is_best_response(const Vector& x, const Vector& p, double tol, double support_tol) {
  if (x.size() != p.size()) throw InvalidArgument("state and payoff dimensions differ");
  const auto br = best_response_set(p, tol);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) > support_tol && !br.contains(static_cast<int>(i))) return false;
  }
  return true;
}

PopulationState lemma1_solve(const Vector& q, const PopulationState& xbar, double tol) {
  if (q.size() != xbar.size()) throw InvalidArgument("payoff and state dimensions differ");
  if (!is_best_response(xbar.values(), q, tol)) {
    throw PreconditionError("xbar is not a best response to q; the fixed point is not unique");
  }
  return project_to_simplex(xbar.values() + q);
}

std::optional<SimplexQpResult> minimize_quadratic_on_simplex(
    const Matrix& Q, const std::optional<std::pair<Vector, double>>& halfspace) {
  const auto n = Q.rows();
  if (n == 0 || Q.cols() != n) throw InvalidArgument("quadratic form must be square and nonempty");
  if (n > 16) throw InvalidArgument("face enumeration supports at most 16 strategies");
  if (halfspace && halfspace->first.size() != n) {
    throw InvalidArgument("half-space normal has the wrong dimension");
  }
  const Matrix H = Q + Q.transpose();  // gradient of z'Qz is Hz
  constexpr double kFeasTol = 1e-12;

  std::optional<SimplexQpResult> best;
  auto consider = [&](const Vector& z) {
    if ((z.array() < -kFeasTol).any()) return;
    if (halfspace && halfspace->first.dot(z) > halfspace->second + kFeasTol) return;
    Vector zc = z.cwiseMax(0.0);
    zc /= zc.sum();
    const double obj = zc.dot(Q * zc);
    if (!best || obj < best->objective) best = SimplexQpResult{zc, obj};
  };

  const int active_options = halfspace ? 2 : 1;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < n; ++i)
      if (mask & (1u << i)) support.push_back(i);
    const auto k = static_cast<Eigen::Index>(support.size());
    for (int active = 0; active < active_options; ++active) {
      // KKT system on the face: H_S z_S + mu 1 + nu a_S = 0, 1'z_S = 1, a_S'z_S = b.
      const Eigen::Index m = k + 1 + active;
      Matrix K = Matrix::Zero(m, m);
      Vector rhs = Vector::Zero(m);
      for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) K(r, c) = H(support[r], support[c]);
        K(r, k) = 1.0;
        K(k, r) = 1.0;
        if (active) {
          K(r, k + 1) = halfspace->first(support[r]);
          K(k + 1, r) = halfspace->first(support[r]);
        }
      }
      rhs(k) = 1.0;
      if (active) rhs(k + 1) = halfspace->second;
      Eigen::FullPivLU<Matrix> lu(K);
      if (!lu.isInvertible()) continue;
      const Vector sol = lu.solve(rhs);
      Vector z = Vector::Zero(n);
      for (Eigen::Index r = 0; r < k; ++r) z(support[r]) = sol(r);
      consider(z);
    }
  }
  return best;
}

std::vector<Vector> simplex_grid(int n, int divisions) {
  if (n <= 0 || divisions <= 0) throw InvalidArgument("simplex grid needs n > 0 and divisions > 0");
  std::vector<Vector> points;
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  // Recursive enumeration of compositions of `divisions` into n parts.
  std::function<void(int, int)> fill = [&](int index, int remaining) {
    if (index == n - 1) {
      counts[static_cast<std::size_t>(index)] = remaining;
      Vector z(n);
      for (int i = 0; i < n; ++i) z(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]) / divisions;
      points.push_back(std::move(z));
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      counts[static_cast<std::size_t>(index)] = c;
      fill(index + 1, remaining - c);
    }
  };
  fill(0, divisions);
  return points;
}

}  // namespace edmstab
