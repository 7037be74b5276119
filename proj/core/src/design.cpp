#include "edmstab/design.hpp"

#include "edmstab/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace edmstab {

namespace {

constexpr int kBisectionIterations = 200;

// Infected part of the SIRS Lyapunov function at frozen B.
double infected_term(const EndemicEquilibrium& eq, double I) {
  const double d = (I - eq.I) / eq.I;
  return eq.I * (d - std::log1p(d));
}

// Shrinks [lo, hi] around a sign change of f, keeping the sign of f at
// each end. Returns the final bracket.
template <class F>
std::pair<double, double> bisect(F&& f, double lo, double hi) {
  const bool lo_nonpositive = f(lo) <= 0.0;
  for (int it = 0; it < kBisectionIterations && hi - lo > 1e-17 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) <= 0.0) == lo_nonpositive) lo = mid;
    else hi = mid;
  }
  return {lo, hi};
}

// Largest I in [I*, 1] with infected_term(I) <= v.
double upper_root(const EndemicEquilibrium& eq, double v) {
  if (infected_term(eq, 1.0) <= v) return 1.0;
  return bisect([&](double I) { return infected_term(eq, I) - v; }, eq.I, 1.0).first;
}

// Smallest I in (0, I*] with infected_term(I) <= v.
double lower_root(const EndemicEquilibrium& eq, double v) {
  double lo = 0.5 * eq.I;
  while (infected_term(eq, lo) <= v && lo > 1e-300) lo *= 0.5;
  return bisect([&](double I) { return v - infected_term(eq, I); }, lo, eq.I).second;
}

struct InfectedPoint {
  double I = 0.0;
  double R = 0.0;
};

// max I s.t. infected_term(I) + a/2 (R - R*)^2 <= beta, R >= 0, I + R <= 1.
std::optional<InfectedPoint> max_infected(const EndemicEquilibrium& eq, double beta) {
  if (!(beta >= 0.0)) return std::nullopt;
  const double half_width = std::sqrt(2.0 * beta / eq.a);
  const double r_lo = std::max(0.0, eq.R - half_width);
  const double r_hi = std::min(1.0, eq.R + half_width);
  if (r_lo > r_hi) return std::nullopt;

  auto reach = [&](double R) {
    const double rem = std::max(0.0, beta - 0.5 * eq.a * (R - eq.R) * (R - eq.R));
    return upper_root(eq, rem);
  };
  const double r0 = std::clamp(eq.R, r_lo, r_hi);
  const double at_r0 = reach(r0);
  if (at_r0 <= 1.0 - r0) return InfectedPoint{at_r0, r0};
  // The I + R <= 1 face binds. Along it, with R <= R* and I = 1 - R > I*,
  // the Lyapunov value decreases in R, so the best point is its smallest
  // feasible R.
  auto on_face = [&](double R) {
    const double dr = R - eq.R;
    return infected_term(eq, 1.0 - R) + 0.5 * eq.a * dr * dr - beta;
  };
  if (on_face(r_lo) <= 0.0) return InfectedPoint{1.0 - r_lo, r_lo};
  const double rc = bisect(on_face, r_lo, r0).second;
  return InfectedPoint{1.0 - rc, rc};
}

double budget_used(const Vector& c, const Vector& z) { return c.dot(z) - c.minCoeff(); }

// Coordinate-pair pattern search on the simplex, maximizing f.
template <class F>
Vector pattern_refine(Vector x, double& fx, F&& f, double step, double step_min) {
  const auto n = x.size();
  while (step >= step_min) {
    bool improved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double move = std::min(step, x(j));
        if (move <= 0.0) continue;
        Vector cand = x;
        cand(i) += move;
        cand(j) -= move;
        const auto fc = f(cand);
        if (fc && *fc > fx) {
          x = std::move(cand);
          fx = *fc;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return x;
}

double sublevel_budget(const Vector& x, const Vector& x_star, double k1, double k2, double level) {
  return (level - 0.5 * k2 * (x - x_star).squaredNorm()) / k1;
}

}  // namespace

void DesignProblem::validate() const {
  sirs.validate();
  const auto n = sirs.Q.rows();
  if (costs.size() != n) throw InvalidArgument("costs must have one entry per strategy");
  if (!costs.allFinite() || (costs.array() < 0.0).any())
    throw InvalidArgument("costs must be finite and nonnegative");
  if (!(budget >= 0.0) || !std::isfinite(budget)) throw InvalidArgument("budget must be >= 0");
  if (!(initial_y.I > 0.0) || !(initial_y.R >= 0.0) || initial_y.I + initial_y.R > 1.0)
    throw InvalidArgument("initial (I, R) must satisfy I > 0, R >= 0, I + R <= 1");
  if (initial_x.size() != n || !on_simplex(initial_x))
    throw InvalidArgument("initial x must lie on the simplex");
  if (!(peak_cap > 0.0 && peak_cap < 1.0)) throw InvalidArgument("peak_cap must be in (0, 1)");
}

DesignProblem DesignProblem::example1() {
  DesignProblem p;
  p.sirs = SirsParams::example1();
  p.costs = (Vector(3) << 0.2, 0.1, 0.0).finished();
  p.budget = 0.1;
  p.initial_y = {0.019, 0.172};
  p.initial_x = Vector::Unit(3, 0);
  p.peak_cap = 0.1;
  return p;
}

TargetSolution solve_target_state(const DesignProblem& problem, int grid_divisions) {
  problem.validate();
  const Matrix& Q = problem.sirs.Q;
  const Vector& c = problem.costs;
  const auto n = static_cast<int>(Q.rows());
  const double limit = c.minCoeff() + problem.budget;

  double grid_best = std::numeric_limits<double>::infinity();
  Vector grid_arg;
  for (const Vector& z : simplex_grid(n, grid_divisions)) {
    if (c.dot(z) > limit + 1e-12) continue;
    const double obj = transmission_rate(Q, z);
    if (obj < grid_best) {
      grid_best = obj;
      grid_arg = z;
    }
  }
  // The cheapest vertex is always feasible and lies on the grid.
  Vector best = grid_arg;
  double best_obj = grid_best;
  if (const auto face = minimize_quadratic_on_simplex(Q, std::make_pair(c, limit))) {
    if (face->objective < best_obj) {
      best = face->z;
      best_obj = face->objective;
    }
  }
  TargetSolution sol{project_to_simplex(best), best_obj, grid_best, 0.0, false};
  sol.objective = transmission_rate(Q, sol.x_star.values());
  sol.budget_used = budget_used(c, sol.x_star.values());
  sol.budget_active = std::abs(sol.budget_used - problem.budget) <= 1e-9;
  return sol;
}

double initial_level(const DesignProblem& problem, const Vector& x_star, double k1, double k2) {
  const double B0 = transmission_rate(problem.sirs.Q, problem.initial_x);
  return k1 * sirs_lyapunov(problem.sirs, problem.initial_y, B0) +
         0.5 * k2 * (problem.initial_x - x_star).squaredNorm();
}

PeakBound peak_infection_bound(const DesignProblem& problem, const PopulationState& x_star,
                               double k1, double k2, const BoundResolution& res) {
  problem.validate();
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw InvalidArgument("k1 and k2 must be positive");
  const Vector& xs = x_star.values();
  const double level = initial_level(problem, xs, k1, k2);

  std::optional<InfectedPoint> last;
  auto evaluate = [&](const Vector& x) -> std::optional<double> {
    const double beta = sublevel_budget(x, xs, k1, k2, level);
    if (beta < 0.0) return std::nullopt;
    const auto eq = endemic_equilibrium(problem.sirs, transmission_rate(problem.sirs.Q, x));
    last = max_infected(eq, beta);
    if (!last) return std::nullopt;
    return last->I;
  };

  PeakBound out;
  out.level = level;
  out.grid_value = -1.0;
  const auto n = static_cast<int>(xs.size());
  for (const Vector& x : simplex_grid(n, res.x_divisions)) {
    const auto v = evaluate(x);
    if (v && *v > out.grid_value) {
      out.grid_value = *v;
      out.x = x;
    }
  }
  // x0 itself is always feasible.
  if (const auto v = evaluate(problem.initial_x); v && *v > out.grid_value) {
    out.grid_value = *v;
    out.x = problem.initial_x;
  }
  double best = out.grid_value;
  out.x = pattern_refine(out.x, best, evaluate, 1.0 / res.x_divisions, res.refine_step_min);
  evaluate(out.x);
  out.value = best;
  out.I = last->I;
  out.R = last->R;
  out.gap_estimate = out.value - out.grid_value;
  return out;
}

std::vector<double> SweepAxis::values() const {
  if (!(min > 0.0) || !(max >= min) || count < 1)
    throw InvalidArgument("sweep axis needs 0 < min <= max and count >= 1");
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    v[static_cast<std::size_t>(i)] =
        log_scale ? min * std::pow(max / min, s) : min + (max - min) * s;
  }
  return v;
}

SweepResult parameter_sweep(const DesignProblem& problem, const PopulationState& x_star,
                            const SweepAxis& k1_axis, const SweepAxis& k2_axis,
                            const BoundResolution& res, unsigned threads) {
  problem.validate();
  SweepResult out;
  out.k1_values = k1_axis.values();
  out.k2_values = k2_axis.values();
  out.peak_cap = problem.peak_cap;
  const std::size_t rows = out.k1_values.size();
  const std::size_t cols = out.k2_values.size();
  out.cells.resize(rows * cols);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx = next++; idx < out.cells.size(); idx = next++) {
      SweepCell& cell = out.cells[idx];
      cell.k1 = out.k1_values[idx / cols];
      cell.k2 = out.k2_values[idx % cols];
      try {
        cell.i_max = peak_infection_bound(problem, x_star, cell.k1, cell.k2, res).value;
        cell.feasible = cell.i_max <= problem.peak_cap;
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.i_max = std::numeric_limits<double>::quiet_NaN();
        cell.error = e.what();
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, out.cells.size()));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  return out;
}

CostBound max_cost_bound(const DesignProblem& problem, const MechanismGains& gains,
                         const BoundResolution& res) {
  problem.validate();
  if (gains.p_star().lpNorm<Eigen::Infinity>() != 0.0)
    throw PreconditionError("the cost bound assumes p* = 0");
  const SirsSystem system(problem.sirs);
  const Vector& xs = gains.x_star().values();
  const double level = initial_level(problem, xs, gains.k1(), gains.k2());
  const int samples = std::max(2, res.infected_samples);

  InfectedPoint arg;
  auto evaluate = [&](const Vector& x) -> std::optional<double> {
    const double beta = sublevel_budget(x, xs, gains.k1(), gains.k2(), level);
    if (beta < 0.0) return std::nullopt;
    const double B = transmission_rate(problem.sirs.Q, x);
    const auto eq = endemic_equilibrium(problem.sirs, B);
    const double i_lo = lower_root(eq, beta);
    const double i_hi = upper_root(eq, beta);
    std::optional<double> best;
    auto consider = [&](double I, double R) {
      const double g = cost_bound_g(gains, system, SirsState{I, R}.vec(), x);
      if (!best || g > *best) {
        best = g;
        arg = {I, R};
      }
    };
    for (int m = 0; m < samples; ++m) {
      const double I = i_lo + (i_hi - i_lo) * m / (samples - 1);
      const double rem = std::max(0.0, beta - infected_term(eq, I));
      const double hw = std::sqrt(2.0 * rem / eq.a);
      const double r_lo = std::max(0.0, eq.R - hw);
      const double r_hi = std::min(1.0 - I, eq.R + hw);
      if (r_lo > r_hi) continue;
      consider(I, r_lo);
      consider(I, r_hi);
      // dU/dB is quadratic in R, so g peaks at an end point or at its vertex.
      const double r_mid = 0.5 * (r_lo + r_hi);
      consider(I, r_mid);
      if (r_hi - r_lo > 1e-12) {
        const auto d = [&](double R) {
          return sirs_lyapunov_dB(problem.sirs, SirsState{I, R}, B, kDefaultGradStep);
        };
        const double d0 = d(r_lo), d1 = d(r_mid), d2 = d(r_hi);
        const double curvature = d0 - 2.0 * d1 + d2;
        if (std::abs(curvature) > 1e-300) {
          const double h = 0.5 * (r_hi - r_lo);
          const double vertex = r_mid - h * (d2 - d0) / (2.0 * curvature);
          if (vertex > r_lo && vertex < r_hi) consider(I, vertex);
        }
      }
    }
    return best;
  };

  CostBound out;
  out.value = -1.0;
  auto take = [&](const Vector& x) {
    if (const auto v = evaluate(x); v && *v > out.value) {
      out.value = *v;
      out.x = x;
      out.I = arg.I;
      out.R = arg.R;
    }
  };
  for (const Vector& x : simplex_grid(gains.strategies(), res.x_divisions)) take(x);
  take(problem.initial_x);
  take(xs);
  // The target equilibrium belongs to every sublevel set.
  const Vector y_star = system.equilibrium(xs);
  if (const double g = cost_bound_g(gains, system, y_star, xs); g > out.value) {
    out.value = g;
    out.x = xs;
    out.I = y_star(0);
    out.R = y_star(1);
  }
  if (out.x.size() > 0) {
    double best = out.value;
    const Vector start = out.x;
    const Vector refined =
        pattern_refine(start, best, evaluate, 1.0 / res.x_divisions, res.refine_step_min * 1e3);
    if (best > out.value) {
      evaluate(refined);
      out.value = best;
      out.x = refined;
      out.I = arg.I;
      out.R = arg.R;
    }
  }
  return out;
}

}  // namespace edmstab
