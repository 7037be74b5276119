#include "edmstab/runner.hpp"

#include "edmstab/errors.hpp"
#include "edmstab/outputs.hpp"
#include "edmstab/sirs.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <sstream>

namespace edmstab {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Tolerances applied when comparing simulated runs with computed bounds.
constexpr double kLyapunovIncreaseTol = 1e-7;
constexpr double kSublevelRelTol = 1e-9;
constexpr double kCostBoundTol = 1e-9;

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string join_values(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
  return s;
}

class Context {
 public:
  Context(const ScenarioConfig& config, std::ostream* log) : config_(config), log_(log) {}

  void note(const std::string& line) {
    if (log_) *log_ << line << '\n';
  }

  void finding(ExitCode code, const std::string& message) {
    note(message);
    result_.findings.push_back(message);
    if (result_.code == ExitCode::ok || static_cast<int>(code) < static_cast<int>(result_.code))
      result_.code = code;
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = fs::path(config_.output_dir) / name;
    write_text_file(path, content);
    result_.files.push_back(path);
  }

  void write_summary(Command command, json body) {
    body["command"] = std::string(to_string(command));
    body["scenario_id"] = config_.scenario_id;
    body["seed"] = config_.seed;
    body["exit_code"] = static_cast<int>(result_.code);
    body["findings"] = result_.findings;
    write("summary.json", body.dump(2) + "\n");
  }

  const ScenarioConfig& config() const { return config_; }
  RunResult& result() { return result_; }

 private:
  const ScenarioConfig& config_;
  std::ostream* log_;
  RunResult result_;
};

std::string csv_of(const Trajectory& t) {
  std::ostringstream os;
  write_trajectory_csv(os, t);
  return os.str();
}

// Bounds are only defined for the epidemic model started at zero payoff
// with a zero target payoff.
bool bounds_apply(const ScenarioConfig& c) {
  return c.system == SystemKind::sirs && c.p_star.isZero(0.0) && c.q0.isZero(0.0);
}

std::vector<std::string> trajectory_names(const std::vector<LearningRule>& rules) {
  std::map<std::string, int> count;
  for (const auto& r : rules) ++count[r.name()];
  std::vector<std::string> names;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    std::string n = "trajectory_" + rules[i].name();
    if (count[rules[i].name()] > 1) n += "_" + std::to_string(i + 1);
    names.push_back(n + ".csv");
  }
  return names;
}

json run_summary(const Trajectory& t, const std::string& file, const std::string& status) {
  json j;
  j["rule"] = t.rule_name;
  j["file"] = file;
  j["status"] = status;
  j["samples"] = t.samples.size();
  j["steps"] = t.steps;
  j["converged"] = t.converged;
  j["convergence_time"] = t.convergence_time ? json(*t.convergence_time) : json(nullptr);
  j["final_distance"] = number_or_null(t.final_distance);
  j["state_max"] = t.state_max;
  j["max_cost"] = number_or_null(t.max_cost);
  j["final_cost"] = t.samples.empty() ? json(nullptr) : number_or_null(t.samples.back().cost);
  j["max_lyapunov_increase"] =
      t.max_lyapunov_increase ? number_or_null(*t.max_lyapunov_increase) : json(nullptr);
  j["reprojections"] = t.reprojections;
  j["clamps"] = t.clamps;
  return j;
}

void check_run(Context& ctx, const Trajectory& t, const std::optional<PeakBound>& peak,
               const std::optional<CostBound>& cost) {
  const auto& c = ctx.config();
  const std::string who = "rule " + t.rule_name + ": ";
  if (peak && !t.state_max.empty() && t.state_max[0] > peak->value + c.peak_slack)
    ctx.finding(ExitCode::bound_violation, who + "peak I " + format_double(t.state_max[0]) +
                                               " exceeds I_max " + format_double(peak->value));
  if (cost && t.max_cost > cost->value + kCostBoundTol)
    ctx.finding(ExitCode::bound_violation, who + "cost " + format_double(t.max_cost) +
                                               " exceeds the cost bound " +
                                               format_double(cost->value));
  if (t.max_lyapunov_increase && *t.max_lyapunov_increase > kLyapunovIncreaseTol)
    ctx.finding(ExitCode::bound_violation,
                who + "composite Lyapunov function increased by " +
                    format_double(*t.max_lyapunov_increase));
  if (t.max_lyapunov_increase && !t.samples.empty()) {
    const double level = t.samples.front().lyapunov_zero_payoff;
    for (const auto& s : t.samples) {
      if (s.lyapunov_zero_payoff > level + kSublevelRelTol * (1.0 + std::abs(level))) {
        ctx.finding(ExitCode::bound_violation,
                    who + "left the initial sublevel set at t=" + format_double(s.t));
        break;
      }
    }
  }
}

void run_simulate(Context& ctx) {
  const auto& c = ctx.config();
  const auto scenarios = make_scenarios(c);
  const auto names = trajectory_names(c.rules);
  const auto& gains = scenarios.front().gains;

  std::optional<PeakBound> peak;
  std::optional<CostBound> cost;
  json bounds = json::object();
  if (bounds_apply(c)) {
    const auto problem = make_design_problem(c);
    peak = peak_infection_bound(problem, gains.x_star(), c.k1, c.k2, c.resolution);
    cost = max_cost_bound(problem, gains, c.resolution);
    bounds["I_max"] = peak->value;
    bounds["cost_bound"] = cost->value;
    bounds["level"] = peak->level;
    ctx.note("I_max=" + format_double(peak->value) + " cost_bound=" + format_double(cost->value));
  }

  json runs = json::array();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    ctx.note("simulating " + c.rules[i].name());
    try {
      const Trajectory t = simulate(scenarios[i]);
      ctx.write(names[i], csv_of(t));
      check_run(ctx, t, peak, cost);
      runs.push_back(run_summary(t, names[i], "ok"));
    } catch (const DivergenceError& e) {
      ctx.write(names[i], csv_of(e.partial()));
      ctx.finding(ExitCode::divergence, "rule " + c.rules[i].name() + ": " + e.what());
      runs.push_back(run_summary(e.partial(), names[i], "diverged"));
    }
  }

  json body;
  body["gains"] = {{"k1", c.k1}, {"k2", c.k2}, {"k3", c.k3}};
  body["x_star"] = to_json(gains.x_star().values());
  body["bounds"] = bounds;
  body["runs"] = runs;
  ctx.write_summary(Command::simulate, body);
}

void run_sweep(Context& ctx) {
  const auto& c = ctx.config();
  const auto problem = make_design_problem(c);
  const auto x_star = resolve_target(c);
  const auto sweep = parameter_sweep(problem, x_star, c.sweep_k1, c.sweep_k2, c.resolution,
                                     c.threads);
  std::ostringstream os;
  write_sweep_csv(os, sweep);
  ctx.write("sweep.csv", os.str());

  std::size_t feasible = 0;
  for (const auto& cell : sweep.cells) {
    if (cell.feasible) ++feasible;
    if (cell.failed)
      ctx.finding(ExitCode::runtime_error, "sweep cell k1=" + format_double(cell.k1) +
                                               " k2=" + format_double(cell.k2) + ": " +
                                               cell.error);
  }
  json body;
  body["cells"] = sweep.cells.size();
  body["feasible_cells"] = feasible;
  body["peak_cap"] = sweep.peak_cap;
  body["x_star"] = to_json(x_star.values());
  ctx.write_summary(Command::sweep, body);
}

void run_design(Context& ctx) {
  const auto& c = ctx.config();
  const auto problem = make_design_problem(c);
  const auto target = solve_target_state(problem, c.target_grid);
  const Vector& xs = target.x_star.values();
  const auto eq = sirs_equilibrium(c.sirs, xs);
  const MechanismGains gains(c.k1, c.k2, c.k3, target.x_star, c.p_star, c.costs);

  KeyValues kv;
  for (Eigen::Index i = 0; i < xs.size(); ++i)
    kv.emplace_back("x_star_" + std::to_string(i + 1), format_double(xs(i)));
  kv.emplace_back("objective", format_double(target.objective));
  kv.emplace_back("budget", format_double(c.budget));
  kv.emplace_back("budget_used", format_double(target.budget_used));
  kv.emplace_back("budget_active", target.budget_active ? "1" : "0");
  kv.emplace_back("I_star", format_double(eq.I));
  kv.emplace_back("R_star", format_double(eq.R));
  kv.emplace_back("k1", format_double(c.k1));
  kv.emplace_back("k2", format_double(c.k2));
  kv.emplace_back("k3", format_double(c.k3));

  json body;
  body["x_star"] = to_json(xs);
  body["objective"] = target.objective;
  if (bounds_apply(c)) {
    const auto peak = peak_infection_bound(problem, target.x_star, c.k1, c.k2, c.resolution);
    const auto cost = max_cost_bound(problem, gains, c.resolution);
    const bool ok = peak.value <= c.peak_cap;
    kv.emplace_back("I_max", format_double(peak.value));
    kv.emplace_back("I_max_grid", format_double(peak.grid_value));
    kv.emplace_back("I_max_gap", format_double(peak.gap_estimate));
    kv.emplace_back("level", format_double(peak.level));
    kv.emplace_back("I_max_x", join_values(peak.x));
    kv.emplace_back("cost_bound", format_double(cost.value));
    kv.emplace_back("peak_cap", format_double(c.peak_cap));
    kv.emplace_back("peak_feasible", ok ? "1" : "0");
    body["I_max"] = peak.value;
    body["cost_bound"] = cost.value;
    body["peak_feasible"] = ok;
    if (!ok)
      ctx.finding(ExitCode::bound_violation, "I_max " + format_double(peak.value) +
                                                 " exceeds the peak cap " +
                                                 format_double(c.peak_cap));
  }
  std::ostringstream os;
  write_key_values(os, kv);
  ctx.write("design.txt", os.str());
  ctx.write_summary(Command::design, body);
}

void run_verify(Context& ctx) {
  const auto& c = ctx.config();
  const int n = c.strategies();
  KeyValues kv;
  json rules = json::array();
  const auto pass = [](bool ok) { return std::string(ok ? "pass" : "fail"); };

  for (std::size_t i = 0; i < c.rules.size(); ++i) {
    const auto& rule = c.rules[i];
    const auto report = verify_rule_properties(rule, n, c.verify_samples, c.verify_box, c.seed);
    const std::string prefix = "rule_" + std::to_string(i + 1) + "." + rule.name();
    const auto emit = [&](const char* name, const PropertyCheck& pc) {
      if (!pc.evaluated) {
        kv.emplace_back(prefix + "." + name, "skipped");
        return;
      }
      kv.emplace_back(prefix + "." + name, pass(pc.passed));
      kv.emplace_back(prefix + "." + name + "_violations", std::to_string(pc.violations));
      kv.emplace_back(prefix + "." + name + "_margin", format_double(pc.worst_margin));
    };
    emit("positive_correlation", report.positive_correlation);
    emit("nash_stationarity", report.nash_stationarity);
    emit("storage_inequality", report.storage_inequality);
    emit("rate_bound", report.rate_bound);
    rules.push_back({{"rule", rule.name()}, {"passed", report.passed()}});
    if (!report.passed())
      ctx.finding(ExitCode::bound_violation, "rule " + rule.name() + " failed certification");
  }

  // Equilibrium invariants at the target state.
  const auto system = make_system(c);
  const auto x_star = resolve_target(c);
  const Vector& xs = x_star.values();
  const Vector y_star = system->equilibrium(xs);
  const double residual = system->field(y_star, xs).lpNorm<Eigen::Infinity>();
  const double u_gap = std::abs(system->lyapunov(y_star, xs) - system->lyapunov_minimum());
  const double grad = grad_x_lyapunov(*system, y_star, xs).lpNorm<Eigen::Infinity>();
  const MechanismGains gains(c.k1, c.k2, c.k3, x_star, c.p_star, c.costs);
  const double g_res = incentive_field(gains, *system, y_star, xs, c.p_star).lpNorm<Eigen::Infinity>();
  struct Check {
    const char* key;
    double value;
    double tol;
  };
  std::vector<Check> checks = {{"equilibrium_residual", residual, 1e-10},
                               {"lyapunov_minimum_gap", u_gap, 1e-10},
                               {"grad_x_lyapunov_at_equilibrium", grad, 1e-6},
                               {"incentive_field_at_equilibrium", g_res, 1e-6}};
  if (c.system == SystemKind::sirs) {
    const double B = transmission_rate(c.sirs.Q, xs);
    const auto newton = sirs_equilibrium_newton(c.sirs, B, {0.5, 0.2});
    checks.push_back({"newton_agreement",
                      std::max(std::abs(newton.I - y_star(0)), std::abs(newton.R - y_star(1))),
                      1e-9});
  }
  for (const auto& ch : checks) {
    const bool ok = std::isfinite(ch.value) && ch.value <= ch.tol;
    kv.emplace_back(std::string("system.") + ch.key, format_double(ch.value));
    kv.emplace_back(std::string("system.") + ch.key + "_check", pass(ok));
    if (!ok)
      ctx.finding(ExitCode::bound_violation,
                  std::string(ch.key) + " " + format_double(ch.value) + " above " +
                      format_double(ch.tol));
  }

  std::ostringstream os;
  write_key_values(os, kv);
  ctx.write("verify.txt", os.str());
  json body;
  body["rules"] = rules;
  body["samples"] = c.verify_samples;
  ctx.write_summary(Command::verify, body);
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::simulate: return "simulate";
    case Command::sweep: return "sweep";
    case Command::design: return "design";
    case Command::verify: return "verify";
  }
  return "?";
}

Command parse_command(std::string_view name) {
  for (Command c : {Command::simulate, Command::sweep, Command::design, Command::verify})
    if (to_string(c) == name) return c;
  throw InvalidArgument("unknown command '" + std::string(name) + "'");
}

RunResult run(Command command, const ScenarioConfig& config, std::ostream* log) {
  Context ctx(config, log);
  try {
    switch (command) {
      case Command::simulate: run_simulate(ctx); break;
      case Command::sweep: run_sweep(ctx); break;
      case Command::design: run_design(ctx); break;
      case Command::verify: run_verify(ctx); break;
    }
  } catch (const ValidationError& e) {
    RunResult r;
    r.code = ExitCode::validation;
    r.findings.push_back(e.what());
    if (log) *log << e.what() << '\n';
    return r;
  } catch (const std::exception& e) {
    RunResult r = ctx.result();
    r.code = ExitCode::runtime_error;
    r.findings.push_back(e.what());
    if (log) *log << "error: " << e.what() << '\n';
    return r;
  }
  return ctx.result();
}

RunResult run(const RunOptions& options) {
  ScenarioConfig config;
  try {
    config = options.config ? load_config(*options.config, options.overrides)
                            : parse_config("{}", options.overrides);
  } catch (const ValidationError& e) {
    if (options.log) *options.log << e.what() << '\n';
    RunResult r;
    r.code = ExitCode::validation;
    r.findings.push_back(e.what());
    return r;
  }
  if (options.out_dir) config.output_dir = options.out_dir->string();
  if (options.seed) config.seed = *options.seed;
  return run(options.command, config, options.log);
}

}  // namespace edmstab
