#include <doctest.h>

#include <edmstab/errors.hpp>
#include <edmstab/mechanism.hpp>
#include <edmstab/sirs.hpp>

#include "test_util.hpp"

using namespace edmstab;
using edmstab::testing::max_abs_diff;
using edmstab::testing::random_box;
using edmstab::testing::random_simplex;
using edmstab::testing::vec;

namespace {

const Vector kCosts = vec({0.2, 0.1, 0.0});

PopulationState target() { return PopulationState::from(vec({1.0 / 12, 10.0 / 12, 1.0 / 12})); }

MechanismGains tuned() { return {2.0, 0.022, 1.0, target(), Vector::Zero(3), kCosts}; }

}  // namespace

TEST_CASE("gain validation") {
  CHECK_THROWS_AS(MechanismGains(0.0, 1, 1, target(), Vector::Zero(3), kCosts), InvalidArgument);
  CHECK_THROWS_AS(MechanismGains(1, -1, 1, target(), Vector::Zero(3), kCosts), InvalidArgument);
  CHECK_THROWS_AS(MechanismGains(1, 1, 1, target(), Vector::Zero(2), kCosts), InvalidArgument);
  CHECK_THROWS_AS(MechanismGains(1, 1, 1, target(), Vector::Zero(3), vec({-0.1, 0, 0})),
                  InvalidArgument);
  // x* must be a best response to p*.
  CHECK_THROWS_AS(MechanismGains(1, 1, 1, target(), vec({1, 0, 0}), kCosts), InvalidArgument);
  CHECK_NOTHROW(MechanismGains(1, 1, 1, PopulationState::vertex(3, 0), vec({1, 0, 0}), kCosts));
}

TEST_CASE("incentive field vanishes at the closed-loop equilibrium") {
  const SirsSystem sys(SirsParams::example1());
  const auto g = tuned();
  const Vector y = sys.equilibrium(g.x_star().values());
  CHECK(incentive_field(g, sys, y, g.x_star().values(), g.p_star()).lpNorm<Eigen::Infinity>() <=
        1e-6);
}

TEST_CASE("incentive field matches term-by-term recomputation") {
  const SirsSystem sys(SirsParams::example1());
  const auto g = tuned();
  const Vector y = vec({0.019, 0.172});
  const Vector x = vec({1, 0, 0});
  const Vector q = vec({0.05, -0.02, 0.01});

  // Gradient of U in x by central differences on the Lyapunov value.
  Vector grad(3);
  for (int i = 0; i < 3; ++i) {
    Vector up = x, dn = x;
    up(i) += 1e-5;
    dn(i) -= 1e-5;
    grad(i) = (sys.lyapunov(y, up) - sys.lyapunov(y, dn)) / 2e-5;
  }
  const Vector oracle = -2.0 * grad - 0.022 * (x - g.x_star().values()) - 1.0 * q;
  const Vector G = incentive_field(g, sys, y, x, q);
  CHECK(G.allFinite());
  CHECK(max_abs_diff(G, oracle) < 1e-6);
}

TEST_CASE("incentive field is affine in q") {
  const SirsSystem sys(SirsParams::example1());
  const auto g = tuned().with_gains(1.5, 0.3, 2.5);
  std::mt19937_64 rng(41);
  for (int k = 0; k < 50; ++k) {
    const Vector x = random_simplex(rng, 3);
    const Vector y = random_box(rng, 2, 0.01, 0.4);
    const Vector q1 = random_box(rng, 3, -1, 1);
    const Vector q2 = random_box(rng, 3, -1, 1);
    const Vector diff = incentive_field(g, sys, y, x, q1) - incentive_field(g, sys, y, x, q2);
    REQUIRE(max_abs_diff(diff, -2.5 * (q1 - q2)) < 1e-14);
  }
}

TEST_CASE("payoff servo at the target state") {
  // With y at the equilibrium for x*, only the payoff term is left.
  const SirsSystem sys(SirsParams::example1());
  const auto g = tuned().with_gains(1e-9, 0.5, 3.0);
  const Vector y = sys.equilibrium(g.x_star().values());
  const Vector q = vec({0.3, -0.1, 0.2});
  CHECK(max_abs_diff(incentive_field(g, sys, y, g.x_star().values(), q), -3.0 * q) < 1e-9);
}

TEST_CASE("rewards and payoffs") {
  const auto g = tuned();
  auto rp = reward_and_payoff(g, Vector::Zero(3));
  CHECK(rp.reward == kCosts);
  CHECK(rp.payoff == Vector::Zero(3));
  rp = reward_and_payoff(g, -kCosts);
  CHECK(rp.reward == Vector::Zero(3));
  CHECK(rp.payoff == -kCosts);
  rp = reward_and_payoff(g, vec({0.05, 0, 0}));
  CHECK(max_abs_diff(rp.reward, vec({0.25, 0.1, 0})) < 1e-16);
  CHECK(rp.payoff == vec({0.05, 0, 0}));
}

TEST_CASE("instantaneous cost") {
  CHECK(instantaneous_cost(vec({0, 0, 1}), kCosts) == 0.0);
  CHECK(instantaneous_cost(vec({0.2, 0.3, 0.5}), Vector::Constant(3, 0.7)) ==
        doctest::Approx(0.7));
  CHECK(instantaneous_cost(target().values(), kCosts) == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("cost bound function") {
  const SirsSystem sys(SirsParams::example1());
  const auto g = tuned();
  const Vector y = sys.equilibrium(g.x_star().values());
  CHECK(cost_bound_g(g, sys, y, g.x_star().values()) == doctest::Approx(0.2).epsilon(1e-6));

  // Large k3 drives the bound back to |c|inf.
  const Vector y0 = vec({0.019, 0.172});
  const Vector x0 = vec({1, 0, 0});
  double prev = 1e300;
  for (double k3 : {1e2, 1e4, 1e6}) {
    const double gap = std::abs(cost_bound_g(g.with_gains(2, 0.022, k3), sys, y0, x0) - 0.2);
    CHECK(gap <= prev);
    prev = gap;
  }
  CHECK(prev < 1e-5);

  // The realized cost at q = G(y, x, 0)/k3 never exceeds g(y, x).
  std::mt19937_64 rng(42);
  for (int k = 0; k < 200; ++k) {
    const Vector x = random_simplex(rng, 3);
    const Vector y = random_box(rng, 2, 0.01, 0.45);
    const Vector q = incentive_field(g, sys, y, x, Vector::Zero(3)) / g.k3();
    const double realized = instantaneous_cost(x, reward_and_payoff(g, q).reward);
    REQUIRE(realized <= cost_bound_g(g, sys, y, x) + 1e-15);
  }
}
