#pragma once

#include "edmstab/design.hpp"
#include "edmstab/leslie_gower.hpp"
#include "edmstab/simulator.hpp"
#include "edmstab/sirs.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edmstab {

enum class SystemKind { sirs, leslie_gower };

/// Fully resolved run configuration. Every field has a default; the
/// defaults reproduce the three-strategy epidemic example.
struct ScenarioConfig {
  std::string scenario_id = "example1";
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  SystemKind system = SystemKind::sirs;
  SirsParams sirs = SirsParams::example1();
  LeslieGowerParams leslie_gower;

  std::vector<LearningRule> rules = {LearningRule::smith(), LearningRule::smith_saturated(),
                                     LearningRule::bnn(), LearningRule::bnn_power()};

  double k1 = 2.0;
  double k2 = 0.022;
  double k3 = 1.0;
  std::optional<Vector> x_star;  // empty: solve the budgeted target problem
  Vector p_star = Vector::Zero(3);
  Vector costs = (Vector(3) << 0.2, 0.1, 0.0).finished();
  double budget = 0.1;

  Vector y0 = (Vector(2) << 0.019, 0.172).finished();
  Vector x0 = Vector::Unit(3, 0);
  Vector q0 = Vector::Zero(3);

  IntegrationSettings integration;

  double peak_cap = 0.1;
  int target_grid = 200;
  BoundResolution resolution;
  /// Tolerance when comparing simulated peaks with the computed I_max.
  double peak_slack = 5e-3;

  SweepAxis sweep_k1{0.5, 8.0, 21, true};
  SweepAxis sweep_k2{0.001, 1.0, 21, true};
  unsigned threads = 0;

  std::size_t verify_samples = 10000;
  PayoffBox verify_box;

  int strategies() const { return static_cast<int>(x0.size()); }
};

/// Parses a JSON configuration, applying `overrides` ("dotted.key=value",
/// value parsed as JSON when possible, otherwise taken as a string) before
/// validation. Throws ValidationError listing every offending key.
ScenarioConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});

/// Reads and parses a file; I/O failures are reported as ValidationError
/// with the key "config".
ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});

std::shared_ptr<const ExoSystem> make_system(const ScenarioConfig& config);

/// Throws ValidationError unless the system is SIRS.
DesignProblem make_design_problem(const ScenarioConfig& config);

/// The configured x*, or the solution of the budgeted target problem.
PopulationState resolve_target(const ScenarioConfig& config);

/// One scenario per configured rule, in configuration order.
std::vector<Scenario> make_scenarios(const ScenarioConfig& config);

}  // namespace edmstab
