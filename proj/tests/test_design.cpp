#include <doctest.h>

#include <edmstab/design.hpp>
#include <edmstab/errors.hpp>
#include <edmstab/simulator.hpp>

#include "test_util.hpp"

#include <cmath>
#include <limits>

using namespace edmstab;
using edmstab::testing::max_abs_diff;
using edmstab::testing::random_simplex;
using edmstab::testing::vec;

namespace {

const Vector kTargetX = vec({1.0 / 12, 10.0 / 12, 1.0 / 12});

PopulationState target() { return PopulationState::from(kTargetX); }

double sublevel_value(const DesignProblem& p, double k1, double k2, double I, double R,
                      const Vector& x) {
  return k1 * sirs_lyapunov(p.sirs, {I, R}, transmission_rate(p.sirs.Q, x)) +
         0.5 * k2 * (x - kTargetX).squaredNorm();
}

// Brute force over an x grid and an (I, R) grid with step 1/ir_divisions.
double brute_force_peak(const DesignProblem& p, double k1, double k2, int x_divisions,
                        int ir_divisions) {
  const double level = sublevel_value(p, k1, k2, p.initial_y.I, p.initial_y.R, p.initial_x);
  double best = -1.0;
  for (const Vector& x : simplex_grid(3, x_divisions)) {
    for (int i = ir_divisions; i >= 1; --i) {
      const double I = static_cast<double>(i) / ir_divisions;
      if (I <= best) break;
      bool hit = false;
      for (int r = 0; r + i <= ir_divisions && !hit; ++r)
        hit = sublevel_value(p, k1, k2, I, static_cast<double>(r) / ir_divisions, x) <= level;
      if (hit) {
        best = I;
        break;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("problem validation") {
  auto p = DesignProblem::example1();
  CHECK_NOTHROW(p.validate());
  p.peak_cap = 1.5;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = DesignProblem::example1();
  p.budget = -0.1;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = DesignProblem::example1();
  p.initial_x = vec({0.5, 0.6, 0.0});
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("target state of the example") {
  const auto p = DesignProblem::example1();
  const auto sol = solve_target_state(p);
  CHECK(max_abs_diff(sol.x_star.values(), kTargetX) < 1e-3);
  CHECK(std::abs(sol.budget_used - 0.1) < 1e-6);
  CHECK(sol.budget_active);
  CHECK(sol.objective <= sol.grid_objective + 1e-6);
  CHECK(sol.objective == doctest::Approx(0.21875).epsilon(1e-6));
}

TEST_CASE("target state beats random feasible points") {
  const auto p = DesignProblem::example1();
  const auto sol = solve_target_state(p);
  std::mt19937_64 rng(51);
  int feasible = 0;
  for (int k = 0; k < 100000; ++k) {
    const Vector z = random_simplex(rng, 3);
    if (p.costs.dot(z) - p.costs.minCoeff() > p.budget) continue;
    ++feasible;
    REQUIRE(sol.objective <= transmission_rate(p.sirs.Q, z) + 1e-12);
  }
  CHECK(feasible > 10000);
}

TEST_CASE("loose budget gives the unconstrained minimum") {
  auto p = DesignProblem::example1();
  p.budget = 0.3;
  const auto sol = solve_target_state(p);
  double grid = std::numeric_limits<double>::infinity();
  for (const Vector& z : simplex_grid(3, 400)) grid = std::min(grid, transmission_rate(p.sirs.Q, z));
  CHECK(sol.objective <= grid + 1e-12);
  CHECK(sol.objective >= grid - 1e-4);
  CHECK_FALSE(sol.budget_active);
}

TEST_CASE("peak bound at the tuned and naive gains") {
  const auto p = DesignProblem::example1();
  const auto tuned = peak_infection_bound(p, target(), 2.0, 0.022);
  CHECK(tuned.value <= 0.10);
  CHECK(tuned.value >= p.initial_y.I);
  CHECK(tuned.gap_estimate >= 0.0);
  const auto naive = peak_infection_bound(p, target(), 1.0, 1.0);
  CHECK(naive.value > 0.10);

  // The reported maximizer is feasible.
  for (const auto* b : {&tuned, &naive}) {
    const double k1 = b == &tuned ? 2.0 : 1.0;
    const double k2 = b == &tuned ? 0.022 : 1.0;
    CHECK(on_simplex(b->x));
    CHECK(b->I + b->R <= 1.0 + 1e-12);
    CHECK(sublevel_value(p, k1, k2, b->I, b->R, b->x) <= b->level * (1 + 1e-12));
    CHECK(b->I == b->value);
  }
}

TEST_CASE("peak bound dominates a brute-force grid search") {
  const auto p = DesignProblem::example1();
  for (auto [k1, k2] : {std::pair{2.0, 0.022}, std::pair{1.0, 1.0}, std::pair{4.0, 0.1}}) {
    const double exact = peak_infection_bound(p, target(), k1, k2).value;
    const double oracle = brute_force_peak(p, k1, k2, 20, 400);
    INFO(k1, " ", k2);
    CHECK(exact >= oracle);
    CHECK(exact <= oracle + 5e-3);
  }
}

TEST_CASE("peak bound depends on the gains only through their ratio") {
  const auto p = DesignProblem::example1();
  const double a = peak_infection_bound(p, target(), 1.0, 0.011).value;
  const double b = peak_infection_bound(p, target(), 3.0, 0.033).value;
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("sweep: consistency, determinism and the feasible region") {
  const auto p = DesignProblem::example1();
  const SweepAxis k1{0.5, 8.0, 5, true};
  const SweepAxis k2{0.005, 0.5, 5, true};
  BoundResolution res;
  res.x_divisions = 40;
  const auto one = parameter_sweep(p, target(), k1, k2, res, 1);
  const auto many = parameter_sweep(p, target(), k1, k2, res, 3);
  REQUIRE(one.cells.size() == 25);
  for (std::size_t i = 0; i < one.cells.size(); ++i) {
    REQUIRE_FALSE(one.cells[i].failed);
    REQUIRE(one.cells[i].i_max == many.cells[i].i_max);
    REQUIRE(one.cells[i].k1 == many.cells[i].k1);
  }
  CHECK(one.at(2, 3).i_max == peak_infection_bound(p, target(), one.k1_values[2],
                                                   one.k2_values[3], res)
                                  .value);

  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      // Nondecreasing in k2 and nonincreasing in k1.
      if (j + 1 < 5) CHECK(one.at(i, j + 1).i_max >= one.at(i, j).i_max - 1e-9);
      if (i + 1 < 5) CHECK(one.at(i + 1, j).i_max <= one.at(i, j).i_max + 1e-9);
      CHECK(one.at(i, j).feasible == (one.at(i, j).i_max <= p.peak_cap));
      CHECK(one.at(i, j).i_max >= p.initial_y.I);
    }
  }
  // Feasible region sits at large k1 and small k2.
  CHECK(one.at(4, 0).feasible);
  CHECK_FALSE(one.at(0, 4).feasible);
}

TEST_CASE("sweep axes") {
  CHECK(SweepAxis{1, 4, 3, false}.values() == std::vector<double>{1, 2.5, 4});
  const auto log = SweepAxis{1, 100, 3, true}.values();
  CHECK(log[1] == doctest::Approx(10.0));
  CHECK(SweepAxis{2, 2, 1, false}.values() == std::vector<double>{2});
  CHECK_THROWS_AS((SweepAxis{0, 1, 3, false}.values()), InvalidArgument);
  CHECK_THROWS_AS((SweepAxis{2, 1, 3, false}.values()), InvalidArgument);
}

TEST_CASE("cost bound") {
  const auto p = DesignProblem::example1();
  const Vector c = p.costs;

  SUBCASE("collapses to |c|inf when the start is the equilibrium") {
    auto q = p;
    const SirsSystem sys(q.sirs);
    q.initial_x = kTargetX;
    q.initial_y = SirsState::from(sys.equilibrium(kTargetX));
    const MechanismGains g(2, 0.022, 1, target(), Vector::Zero(3), c);
    CHECK(max_cost_bound(q, g).value == doctest::Approx(0.2).epsilon(1e-6));
  }
  SUBCASE("dominates the long-run cost and the sampled sublevel set") {
    const MechanismGains g(2, 0.022, 1, target(), Vector::Zero(3), c);
    const auto bound = max_cost_bound(p, g);
    CHECK(bound.value >= 0.1);
    const SirsSystem sys(p.sirs);
    const double level = initial_level(p, kTargetX, 2.0, 0.022);
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int inside = 0;
    for (int k = 0; k < 20000; ++k) {
      const Vector x = random_simplex(rng, 3);
      const double I = 0.001 + 0.15 * u(rng);
      const double R = (1.0 - I) * u(rng);
      if (sublevel_value(p, 2.0, 0.022, I, R, x) > level) continue;
      ++inside;
      REQUIRE(cost_bound_g(g, sys, vec({I, R}), x) <= bound.value + 1e-9);
    }
    CHECK(inside > 20);
  }
  SUBCASE("requires zero target payoff") {
    const MechanismGains g(1, 1, 1, PopulationState::vertex(3, 0), vec({0.1, 0, 0}), c);
    CHECK_THROWS_AS(max_cost_bound(p, g), PreconditionError);
  }
}
