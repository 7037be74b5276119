#pragma once

#include "edmstab/errors.hpp"
#include "edmstab/exo_system.hpp"
#include "edmstab/learning_rules.hpp"
#include "edmstab/mechanism.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace edmstab {

/// Stacked closed-loop state (y, x, q) at time t.
struct CoupledState {
  Vector y;
  Vector x;
  Vector q;
  double t = 0.0;
};

/// Terms of the composite Lyapunov function
///   L = k1 U(y; x) + k3 (max_i p*_i - x'p*) + k2/2 |x - x*|^2 + S(x, q).
struct LyapunovBreakdown {
  double exo_term = 0.0;
  double target_term = 0.0;
  double distance_term = 0.0;
  std::optional<double> storage_term;  // empty when the rule has no closed-form storage

  std::optional<double> total() const {
    if (!storage_term) return std::nullopt;
    return exo_term + target_term + distance_term + *storage_term;
  }
};

LyapunovBreakdown total_lyapunov(const MechanismGains& gains, const ExoSystem& system,
                                 const LearningRule& rule, const CoupledState& state);

/// L(y, x, 0). The storage term vanishes at zero payoff, so this is defined
/// for every rule.
double lyapunov_zero_payoff(const MechanismGains& gains, const ExoSystem& system, const Vector& y,
                            const Vector& x);

/// Distance max(|y - y*(x*)|, |x - x*|, |q - p*|) in the infinity norm.
double equilibrium_distance(const MechanismGains& gains, const ExoSystem& system,
                            const CoupledState& state);

struct StepReport {
  bool reprojected = false;
  bool clamped = false;
  double drift = 0.0;  // simplex drift before re-projection
};

/// Field evaluation failed inside a step; carries the state the step started from.
class StepError : public Error {
 public:
  StepError(const std::string& message, CoupledState state)
      : Error(message), state_(std::move(state)) {}
  const CoupledState& state() const noexcept { return state_; }

 private:
  CoupledState state_;
};

/// Classical RK4 step of (f, V, G). x is re-projected onto the simplex when
/// it drifts by more than kSimplexTol; y is clamped at the system's floors.
CoupledState step_rk4(const ExoSystem& system, const LearningRule& rule,
                      const MechanismGains& gains, const CoupledState& state, double dt,
                      StepReport* report = nullptr);

struct IntegrationSettings {
  double horizon = 5000.0;
  double dt = 0.05;
  double record_interval = 1.0;
  double conv_tol = 1e-3;
  double dwell_time = 50.0;
  bool stop_on_convergence = false;

  /// Throws InvalidArgument. record_interval must be a whole number of steps
  /// and horizon a whole number of record intervals.
  void validate() const;
};

struct Scenario {
  std::shared_ptr<const ExoSystem> system;
  LearningRule rule;
  MechanismGains gains;
  CoupledState initial;
  IntegrationSettings settings;
  std::string id = "scenario";
  std::uint64_t seed = 0;
};

struct TrajectorySample {
  double t = 0.0;
  Vector y;
  Vector x;
  Vector q;
  Vector p;
  Vector r;
  double cost = 0.0;
  std::optional<double> lyapunov_total;
  double lyapunov_zero_payoff = 0.0;
  double exo_lyapunov = 0.0;
  double v_norm = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double dt = 0.0;
  double record_interval = 0.0;
  std::string scenario_id;
  std::string system_name;
  std::string rule_name;
  std::vector<std::string> state_labels;
  std::uint64_t seed = 0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;

  bool converged = false;
  std::optional<double> convergence_time;  // start of the final dwell window
  double final_distance = 0.0;
  std::size_t steps = 0;
  int reprojections = 0;
  int clamps = 0;
  /// Largest per-step (L_{k+1} - L_k) / (1 + L_k); empty without storage.
  std::optional<double> max_lyapunov_increase;
  /// Over every integration step, not only recorded samples.
  std::vector<double> state_max;
  double max_cost = 0.0;
};

/// Raised when the state becomes non-finite or a field evaluation fails.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, Trajectory partial)
      : Error(message), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

/// Fixed-step integration over [0, horizon] with a sample every
/// record_interval. Convergence means the equilibrium distance stayed below
/// conv_tol for dwell_time; with stop_on_convergence the run ends there.
Trajectory simulate(const Scenario& scenario);

}  // namespace edmstab
