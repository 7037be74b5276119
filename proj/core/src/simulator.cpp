#include "edmstab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edmstab {

namespace {

struct Derivative {
  Vector dy;
  Vector dx;
  Vector dq;
};

Derivative closed_loop_field(const ExoSystem& system, const LearningRule& rule,
                             const MechanismGains& gains, Vector y, const Vector& x,
                             const Vector& q, bool& clamped) {
  clamped = system.enforce_domain(y) || clamped;
  Derivative d;
  d.dy = system.field(y, x);
  d.dx = edm_field(rule, x, q);  // p = q
  d.dq = incentive_field(gains, system, y, x, q);
  return d;
}

bool finite(const CoupledState& s) {
  return s.y.allFinite() && s.x.allFinite() && s.q.allFinite() && std::isfinite(s.t);
}

long whole_ratio(double num, double den) { return std::lround(num / den); }

bool is_whole_ratio(double num, double den) {
  const double ratio = num / den;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, std::abs(ratio));
}

}  // namespace

LyapunovBreakdown total_lyapunov(const MechanismGains& gains, const ExoSystem& system,
                                 const LearningRule& rule, const CoupledState& state) {
  LyapunovBreakdown b;
  b.exo_term = gains.k1() * system.lyapunov(state.y, state.x);
  b.target_term = gains.k3() * (gains.p_star().maxCoeff() - state.x.dot(gains.p_star()));
  b.distance_term = 0.5 * gains.k2() * (state.x - gains.x_star().values()).squaredNorm();
  if (rule.has_closed_form_storage()) b.storage_term = storage_value(rule, state.x, state.q);
  return b;
}

double lyapunov_zero_payoff(const MechanismGains& gains, const ExoSystem& system, const Vector& y,
                            const Vector& x) {
  return gains.k1() * system.lyapunov(y, x) +
         gains.k3() * (gains.p_star().maxCoeff() - x.dot(gains.p_star())) +
         0.5 * gains.k2() * (x - gains.x_star().values()).squaredNorm();
}

double equilibrium_distance(const MechanismGains& gains, const ExoSystem& system,
                            const CoupledState& state) {
  const Vector y_star = system.equilibrium(gains.x_star().values());
  return std::max({(state.y - y_star).lpNorm<Eigen::Infinity>(),
                   (state.x - gains.x_star().values()).lpNorm<Eigen::Infinity>(),
                   (state.q - gains.p_star()).lpNorm<Eigen::Infinity>()});
}

CoupledState step_rk4(const ExoSystem& system, const LearningRule& rule,
                      const MechanismGains& gains, const CoupledState& state, double dt,
                      StepReport* report) {
  if (!(dt > 0.0)) throw InvalidArgument("step size must be positive");
  bool clamped = false;
  Derivative k1, k2, k3, k4;
  try {
    k1 = closed_loop_field(system, rule, gains, state.y, state.x, state.q, clamped);
    k2 = closed_loop_field(system, rule, gains, state.y + 0.5 * dt * k1.dy,
                           state.x + 0.5 * dt * k1.dx, state.q + 0.5 * dt * k1.dq, clamped);
    k3 = closed_loop_field(system, rule, gains, state.y + 0.5 * dt * k2.dy,
                           state.x + 0.5 * dt * k2.dx, state.q + 0.5 * dt * k2.dq, clamped);
    k4 = closed_loop_field(system, rule, gains, state.y + dt * k3.dy, state.x + dt * k3.dx,
                           state.q + dt * k3.dq, clamped);
  } catch (const Error& e) {
    throw StepError(std::string("field evaluation failed: ") + e.what(), state);
  }

  CoupledState next;
  next.t = state.t + dt;
  next.y = state.y + dt / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
  next.x = state.x + dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  next.q = state.q + dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);

  StepReport local;
  if (next.x.allFinite()) {
    local.drift = std::max(std::abs(next.x.sum() - 1.0), std::max(0.0, -next.x.minCoeff()));
    if (local.drift > kSimplexTol) {
      next.x = project_to_simplex(next.x).values();
      local.reprojected = true;
    }
  }
  if (next.y.allFinite()) clamped = system.enforce_domain(next.y) || clamped;
  local.clamped = clamped;
  if (report) *report = local;
  return next;
}

void IntegrationSettings::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon))
    throw InvalidArgument("horizon must be nonnegative");
  if (!(record_interval > 0.0)) throw InvalidArgument("record_interval must be positive");
  if (!is_whole_ratio(record_interval, dt))
    throw InvalidArgument("record_interval must be a whole number of steps");
  if (!is_whole_ratio(horizon, record_interval))
    throw InvalidArgument("horizon must be a whole number of record intervals");
  if (!(conv_tol > 0.0)) throw InvalidArgument("conv_tol must be positive");
  if (!(dwell_time >= 0.0)) throw InvalidArgument("dwell_time must be nonnegative");
}

Trajectory simulate(const Scenario& scenario) {
  if (!scenario.system) throw InvalidArgument("scenario has no exogenous system");
  const ExoSystem& system = *scenario.system;
  const auto& settings = scenario.settings;
  const auto& gains = scenario.gains;
  const auto& rule = scenario.rule;
  settings.validate();
  rule.validate();

  const int n = gains.strategies();
  const auto& init = scenario.initial;
  if (system.strategies() != n || init.x.size() != n || init.q.size() != n)
    throw InvalidArgument("scenario dimensions disagree");
  if (!system.valid_state(init.y)) throw InvalidArgument("initial exogenous state is invalid");
  if (!on_simplex(init.x)) throw InvalidArgument("initial population state is not on the simplex");

  Trajectory traj;
  traj.dt = settings.dt;
  traj.record_interval = settings.record_interval;
  traj.scenario_id = scenario.id;
  traj.system_name = std::string(system.name());
  traj.rule_name = rule.name();
  traj.state_labels = system.state_labels();
  traj.seed = scenario.seed;
  traj.k1 = gains.k1();
  traj.k2 = gains.k2();
  traj.k3 = gains.k3();
  traj.state_max.assign(static_cast<std::size_t>(system.state_dim()),
                        -std::numeric_limits<double>::infinity());
  traj.max_cost = -std::numeric_limits<double>::infinity();

  const long steps_per_record = whole_ratio(settings.record_interval, settings.dt);
  const long total_steps = whole_ratio(settings.horizon, settings.dt);
  const bool track_lyapunov = rule.has_closed_form_storage();
  if (track_lyapunov) traj.max_lyapunov_increase = -std::numeric_limits<double>::infinity();

  auto observe = [&](const CoupledState& s) {
    for (Eigen::Index i = 0; i < s.y.size(); ++i)
      traj.state_max[static_cast<std::size_t>(i)] =
          std::max(traj.state_max[static_cast<std::size_t>(i)], s.y(i));
    const auto rp = reward_and_payoff(gains, s.q);
    traj.max_cost = std::max(traj.max_cost, instantaneous_cost(s.x, rp.reward));
  };

  auto record = [&](const CoupledState& s) {
    TrajectorySample sample;
    sample.t = s.t;
    sample.y = s.y;
    sample.x = s.x;
    sample.q = s.q;
    const auto rp = reward_and_payoff(gains, s.q);
    sample.p = rp.payoff;
    sample.r = rp.reward;
    sample.cost = instantaneous_cost(s.x, rp.reward);
    const auto lb = total_lyapunov(gains, system, rule, s);
    sample.lyapunov_total = lb.total();
    sample.lyapunov_zero_payoff = lyapunov_zero_payoff(gains, system, s.y, s.x);
    sample.exo_lyapunov = system.lyapunov(s.y, s.x);
    sample.v_norm = edm_field(rule, s.x, s.q).norm();
    traj.samples.push_back(std::move(sample));
  };

  CoupledState state = init;
  state.t = 0.0;
  record(state);
  observe(state);

  double lyap = track_lyapunov ? *total_lyapunov(gains, system, rule, state).total() : 0.0;
  std::optional<double> below_since;
  auto update_convergence = [&](const CoupledState& s) {
    const double dist = equilibrium_distance(gains, system, s);
    traj.final_distance = dist;
    if (dist < settings.conv_tol) {
      if (!below_since) below_since = s.t;
    } else {
      below_since.reset();
    }
    traj.converged = below_since && s.t - *below_since >= settings.dwell_time - 1e-9;
    traj.convergence_time = traj.converged ? below_since : std::nullopt;
  };
  update_convergence(state);

  for (long k = 1; k <= total_steps; ++k) {
    StepReport report;
    CoupledState next;
    try {
      next = step_rk4(system, rule, gains, state, settings.dt, &report);
    } catch (const Error& e) {
      throw DivergenceError(e.what(), std::move(traj));
    }
    // Integer step count keeps the time grid free of accumulated rounding.
    next.t = static_cast<double>(k) * settings.dt;
    if (!finite(next)) {
      throw DivergenceError("non-finite state at t = " + std::to_string(next.t), std::move(traj));
    }
    traj.reprojections += report.reprojected ? 1 : 0;
    traj.clamps += report.clamped ? 1 : 0;
    state = std::move(next);
    traj.steps = static_cast<std::size_t>(k);
    observe(state);

    if (track_lyapunov) {
      const double now = *total_lyapunov(gains, system, rule, state).total();
      traj.max_lyapunov_increase = std::max(*traj.max_lyapunov_increase, (now - lyap) / (1.0 + lyap));
      lyap = now;
    }
    update_convergence(state);

    const bool on_record = k % steps_per_record == 0;
    if (on_record) record(state);
    if (settings.stop_on_convergence && traj.converged) {
      if (!on_record) record(state);
      break;
    }
  }
  return traj;
}

}  // namespace edmstab
