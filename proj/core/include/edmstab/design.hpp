#pragma once

#include "edmstab/mechanism.hpp"
#include "edmstab/sirs.hpp"

#include <optional>
#include <string>
#include <vector>

namespace edmstab {

/// Inputs of the epidemic design problem: choose x* within a long-run
/// budget, then gains that keep the infected fraction under peak_cap.
struct DesignProblem {
  SirsParams sirs;
  Vector costs;          // intrinsic strategy costs c
  double budget = 0.0;   // c*: allowed c'x - min_i c_i
  SirsState initial_y;   // (I0, R0)
  Vector initial_x;      // x0
  double peak_cap = 0.1;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;

  static DesignProblem example1();
};

struct TargetSolution {
  PopulationState x_star;
  double objective = 0.0;       // B(x*)
  double grid_objective = 0.0;  // best value on the seeding grid
  double budget_used = 0.0;     // c'x* - min_i c_i
  bool budget_active = false;
};

/// argmin B(z) over the simplex subject to c'z - min_i c_i <= c*. Dense grid
/// seeding at 1/grid_divisions, then exact stationary points of every face.
TargetSolution solve_target_state(const DesignProblem& problem, int grid_divisions = 200);

struct BoundResolution {
  int x_divisions = 100;          // simplex grid for x
  int infected_samples = 64;      // I samples per x (cost bound only)
  double refine_step_min = 1e-9;  // pattern-search stopping step
};

struct PeakBound {
  double value = 0.0;          // refined maximum of I (a feasible, hence lower, value)
  double grid_value = 0.0;     // best value on the x grid
  double gap_estimate = 0.0;   // value - grid_value
  double level = 0.0;          // L0 = L(y0, x0, 0)
  Vector x;                    // maximizer
  double I = 0.0;
  double R = 0.0;
};

/// L0 = k1 U(y0; x0) + k2/2 |x0 - x*|^2 (p* = q0 = 0).
double initial_level(const DesignProblem& problem, const Vector& x_star, double k1, double k2);

/// max I over {x in simplex, I, R >= 0, I + R <= 1, L(y, x, 0) <= L0} for
/// p* = 0. The (I, R) subproblem at fixed x is solved by bisection on the
/// boundary of the sublevel set; x by grid search plus pattern refinement.
PeakBound peak_infection_bound(const DesignProblem& problem, const PopulationState& x_star,
                               double k1, double k2, const BoundResolution& res = {});

struct SweepAxis {
  double min = 1.0;
  double max = 1.0;
  int count = 1;
  bool log_scale = false;

  /// Throws InvalidArgument unless 0 < min <= max and count >= 1.
  std::vector<double> values() const;
};

struct SweepCell {
  double k1 = 0.0;
  double k2 = 0.0;
  double i_max = 0.0;
  bool feasible = false;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<double> k1_values;
  std::vector<double> k2_values;
  std::vector<SweepCell> cells;  // k1-major: cells[i * k2_values.size() + j]
  double peak_cap = 0.0;

  const SweepCell& at(std::size_t i, std::size_t j) const {
    return cells[i * k2_values.size() + j];
  }
};

/// Grid of peak_infection_bound over (k1, k2). Cells are evaluated on
/// `threads` workers (0 = hardware concurrency) and assembled in a fixed
/// order, so the result does not depend on scheduling.
SweepResult parameter_sweep(const DesignProblem& problem, const PopulationState& x_star,
                            const SweepAxis& k1_axis, const SweepAxis& k2_axis,
                            const BoundResolution& res = {}, unsigned threads = 0);

struct CostBound {
  double value = 0.0;
  Vector x;
  double I = 0.0;
  double R = 0.0;
};

/// max g(y, x) over the same sublevel set, for p* = 0 and q0 = 0.
/// Throws PreconditionError if p* is not zero.
CostBound max_cost_bound(const DesignProblem& problem, const MechanismGains& gains,
                         const BoundResolution& res = {});

}  // namespace edmstab
