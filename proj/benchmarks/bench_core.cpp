#include <edmstab/design.hpp>
#include <edmstab/simplex.hpp>
#include <edmstab/simulator.hpp>
#include <edmstab/sirs.hpp>

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

using namespace edmstab;

namespace {

Vector target_x() { return (Vector(3) << 1.0 / 12, 10.0 / 12, 1.0 / 12).finished(); }

void BM_ProjectToSimplex(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(project_to_simplex(v));
}
BENCHMARK(BM_ProjectToSimplex)->Arg(3)->Arg(16)->Arg(256);

void BM_Rk4Step(benchmark::State& state) {
  const SirsSystem sys(SirsParams::example1());
  const auto rule = LearningRule::preset(static_cast<RuleKind>(state.range(0)));
  const MechanismGains gains(2.0, 0.022, 1.0, PopulationState::from(target_x()), Vector::Zero(3),
                             (Vector(3) << 0.2, 0.1, 0.0).finished());
  CoupledState s{(Vector(2) << 0.03, 0.3).finished(), (Vector(3) << 0.5, 0.3, 0.2).finished(),
                 (Vector(3) << 0.05, -0.02, 0.01).finished(), 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(step_rk4(sys, rule, gains, s, 0.05));
  state.SetLabel(rule.name());
}
BENCHMARK(BM_Rk4Step)->DenseRange(0, 3);

void BM_PeakBoundCell(benchmark::State& state) {
  const auto problem = DesignProblem::example1();
  BoundResolution res;
  res.x_divisions = static_cast<int>(state.range(0));
  const auto xs = PopulationState::from(target_x());
  for (auto _ : state) benchmark::DoNotOptimize(peak_infection_bound(problem, xs, 2.0, 0.022, res));
}
BENCHMARK(BM_PeakBoundCell)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
