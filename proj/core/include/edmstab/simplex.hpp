#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace edmstab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Membership tolerance for the standard simplex.
inline constexpr double kSimplexTol = 1e-9;

bool all_finite(const Vector& v);

/// True if every entry is >= -tol and the entries sum to 1 within tol.
bool on_simplex(const Vector& x, double tol = kSimplexTol);

/// A point of the standard simplex: the strategy shares of the population.
class PopulationState {
 public:
  /// Validates membership; throws InvalidArgument otherwise. Entries in
  /// [-tol, 0) are clipped to zero.
  static PopulationState from(Vector x, double tol = kSimplexTol);
  static PopulationState vertex(int n, int i);
  static PopulationState uniform(int n);

  const Vector& values() const noexcept { return x_; }
  int size() const noexcept { return static_cast<int>(x_.size()); }
  double operator[](int i) const { return x_(i); }

 private:
  explicit PopulationState(Vector x) : x_(std::move(x)) {}
  Vector x_;
};

/// Euclidean projection onto the standard simplex (sort-based, exact).
/// Points already on the simplex up to rounding are returned unchanged,
/// which makes the projection idempotent bit for bit.
PopulationState project_to_simplex(const Vector& v);

/// Indices of entries of p within tol of the maximum. Ties are kept.
struct BestResponseSet {
  std::vector<int> indices;
  double tol = 0.0;

  bool contains(int i) const;
};

BestResponseSet best_response_set(const Vector& p, double tol);

/// x is in argmax_{z in simplex} p'z, i.e. every strategy carrying more
/// than support_tol mass is a near-best response.
bool is_best_response(const Vector& x, const Vector& p, double tol,
                      double support_tol = kSimplexTol);

/// Returns the unique x with x in argmax (xbar - x + q)'z, which is xbar
/// whenever xbar is a best response to q. Computed as the projection of
/// xbar + q. Throws PreconditionError if xbar is not a best response to q.
PopulationState lemma1_solve(const Vector& q, const PopulationState& xbar,
                             double tol = kSimplexTol);

struct SimplexQpResult {
  Vector z;
  double objective = 0.0;
};

/// Global minimum of z'Qz over {z in simplex, a'z <= b} by enumerating the
/// stationary points of every face. Q need not be symmetric or convex.
/// Intended for small n (at most 16). Returns nullopt if infeasible.
std::optional<SimplexQpResult> minimize_quadratic_on_simplex(
    const Matrix& Q, const std::optional<std::pair<Vector, double>>& halfspace = std::nullopt);

/// All grid points of the simplex with coordinates in multiples of
/// 1/divisions, in lexicographic order.
std::vector<Vector> simplex_grid(int n, int divisions);

}  // namespace edmstab
