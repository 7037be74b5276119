#include "edmstab/scenario.hpp"

#include "edmstab/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace edmstab {

namespace {

using json = nlohmann::json;

class Problems {
 public:
  void add(const std::string& key, const std::string& message) {
    keys_.push_back(key);
    messages_ << (messages_.tellp() > 0 ? "; " : "") << key << ": " << message;
  }
  bool empty() const { return keys_.empty(); }
  void raise() const {
    if (!keys_.empty()) throw ValidationError(keys_, "invalid configuration: " + messages_.str());
  }

 private:
  std::vector<std::string> keys_;
  std::ostringstream messages_;
};

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Object view that records which keys were consumed and reports the rest.
class Section {
 public:
  Section(const json* node, std::string path, Problems& problems)
      : node_(node), path_(std::move(path)), problems_(problems) {
    if (node_ && !node_->is_object()) {
      problems_.add(path_, "must be an object");
      node_ = nullptr;
    }
  }

  ~Section() {
    if (!node_) return;
    for (const auto& item : node_->items())
      if (!seen_.count(item.key())) problems_.add(join(path_, item.key()), "unknown key");
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  std::string key(const std::string& name) const { return join(path_, name); }

  const json* find(const std::string& name) {
    seen_.insert(name);
    if (!node_) return nullptr;
    const auto it = node_->find(name);
    return it == node_->end() ? nullptr : &*it;
  }

  Section child(const std::string& name) { return Section(find(name), key(name), problems_); }

  void number(const std::string& name, double& out) {
    if (const json* v = find(name)) {
      if (v->is_number()) out = v->get<double>();
      else problems_.add(key(name), "must be a number");
    }
  }

  template <class Int>
  void integer(const std::string& name, Int& out) {
    if (const json* v = find(name)) {
      if (v->is_number_integer() && v->get<long long>() >= 0) out = v->get<Int>();
      else problems_.add(key(name), "must be a nonnegative integer");
    }
  }

  void boolean(const std::string& name, bool& out) {
    if (const json* v = find(name)) {
      if (v->is_boolean()) out = v->get<bool>();
      else problems_.add(key(name), "must be true or false");
    }
  }

  void string(const std::string& name, std::string& out) {
    if (const json* v = find(name)) {
      if (v->is_string()) out = v->get<std::string>();
      else problems_.add(key(name), "must be a string");
    }
  }

  bool vector(const std::string& name, Vector& out) {
    const json* v = find(name);
    if (!v) return false;
    return read_vector(*v, key(name), out);
  }

  bool read_vector(const json& v, const std::string& at, Vector& out) {
    if (!v.is_array() || v.empty()) {
      problems_.add(at, "must be a nonempty array of numbers");
      return false;
    }
    Vector tmp(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        problems_.add(at, "must be a nonempty array of numbers");
        return false;
      }
      tmp(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    out = std::move(tmp);
    return true;
  }

  Problems& problems() { return problems_; }

 private:
  const json* node_;
  std::string path_;
  Problems& problems_;
  std::set<std::string> seen_;
};

void read_matrix(Section& s, const std::string& name, Matrix& out) {
  const json* v = s.find(name);
  if (!v) return;
  const auto bad = [&] { s.problems().add(s.key(name), "must be a square array of numbers"); };
  if (!v->is_array() || v->empty()) return bad();
  const auto n = static_cast<Eigen::Index>(v->size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = (*v)[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) return bad();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!row[static_cast<std::size_t>(j)].is_number()) return bad();
      m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  out = std::move(m);
}

void read_affine(Section& parent, const std::string& name, AffineMap& out) {
  if (!parent.find(name)) {
    parent.problems().add(parent.key(name), "is required");
    return;
  }
  Section s = parent.child(name);
  s.number("offset", out.offset);
  if (!s.vector("slope", out.slope)) s.problems().add(s.key("slope"), "is required");
}

void read_axis(Section& parent, const std::string& name, SweepAxis& axis) {
  Section s = parent.child(name);
  s.number("min", axis.min);
  s.number("max", axis.max);
  s.integer("count", axis.count);
  s.boolean("log", axis.log_scale);
}

void read_rules(Section& root, ScenarioConfig& cfg) {
  const json* v = root.find("rules");
  if (!v) return;
  Problems& problems = root.problems();
  if (!v->is_array() || v->empty()) {
    problems.add("rules", "must be a nonempty array");
    return;
  }
  const double spread = cfg.verify_box.hi - cfg.verify_box.lo;
  cfg.rules.clear();
  for (std::size_t i = 0; i < v->size(); ++i) {
    const std::string at = "rules[" + std::to_string(i) + "]";
    const json& entry = (*v)[i];
    std::string kind_name;
    if (entry.is_string()) kind_name = entry.get<std::string>();
    else if (entry.is_object() && entry.contains("kind") && entry["kind"].is_string())
      kind_name = entry["kind"].get<std::string>();
    RuleKind kind;
    try {
      kind = parse_rule_kind(kind_name);
    } catch (const InvalidArgument&) {
      problems.add(at + ".kind", "unknown learning rule '" + kind_name + "'");
      continue;
    }
    LearningRule rule = LearningRule::preset(kind);
    bool explicit_bound = false;
    if (entry.is_object()) {
      Section s(&entry, at, problems);
      std::string ignored;
      s.string("kind", ignored);
      s.number("rate_scale", rule.rate_scale);
      s.number("saturation", rule.saturation);
      s.number("exponent", rule.exponent);
      explicit_bound = s.find("tau_bar") != nullptr;
      s.number("tau_bar", rule.tau_bar);
    }
    if (!explicit_bound && spread > 0.0) rule.tau_bar = rule.max_rate(spread);
    try {
      rule.validate();
    } catch (const InvalidArgument& e) {
      problems.add(at, e.what());
    }
    cfg.rules.push_back(rule);
  }
}

// Sets `value` at a dotted path, descending into arrays on integer segments.
void apply_override(json& doc, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError({"override"}, "override must look like key=value: '" + item + "'");
  const std::string path = item.substr(0, eq);
  const std::string raw = item.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string seg = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (seg.empty()) throw ValidationError({path}, "empty segment in override key '" + path + "'");
    json* next;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(seg);
      } catch (const std::exception&) {
        throw ValidationError({path}, "override key '" + path + "' indexes an array by name");
      }
      if (idx >= node->size()) throw ValidationError({path}, "override index out of range");
      next = &(*node)[idx];
    } else {
      if (seg.find_first_not_of("0123456789") == std::string::npos)
        throw ValidationError({path}, "override key '" + path +
                                          "' indexes an array that the configuration does not set");
      if (!node->is_object()) *node = json::object();
      next = &(*node)[seg];
    }
    node = next;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

void check(Problems& p, bool ok, const std::string& key, const std::string& message) {
  if (!ok) p.add(key, message);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

void validate(const ScenarioConfig& cfg, Problems& p) {
  const int n = cfg.strategies();
  check(p, positive(cfg.k1), "gains.k1", "must be positive");
  check(p, positive(cfg.k2), "gains.k2", "must be positive");
  check(p, positive(cfg.k3), "gains.k3", "must be positive");

  if (cfg.system == SystemKind::sirs) {
    const auto& s = cfg.sirs;
    for (auto [name, v] : {std::pair{"delta", s.delta}, {"zeta", s.zeta}, {"theta", s.theta},
                           {"gamma", s.gamma}, {"omega_bar", s.omega_bar}})
      check(p, v >= 0.0 && std::isfinite(v), std::string("system.") + name, "must be >= 0");
    check(p, s.Q.rows() == n, "system.Q", "must be n x n with n = size of initial.x");
    if (p.empty()) {
      try {
        s.validate();
      } catch (const InvalidArgument& e) {
        p.add("system", e.what());
      }
    }
  } else {
    const auto& lg = cfg.leslie_gower;
    check(p, positive(lg.a1), "system.a1", "must be positive");
    check(p, positive(lg.a2), "system.a2", "must be positive");
    check(p, lg.strategies() == n, "system.z1.slope", "must have one entry per strategy");
    if (p.empty()) {
      try {
        lg.validate();
      } catch (const InvalidArgument& e) {
        p.add("system", e.what());
      }
    }
  }

  check(p, cfg.costs.size() == n, "costs", "must have one entry per strategy");
  check(p, cfg.costs.allFinite() && (cfg.costs.array() >= 0.0).all(), "costs",
        "must be finite and nonnegative");
  check(p, cfg.budget >= 0.0 && std::isfinite(cfg.budget), "budget", "must be >= 0");
  check(p, cfg.p_star.size() == n && cfg.p_star.allFinite(), "target.p_star",
        "must have one finite entry per strategy");
  if (cfg.x_star) {
    check(p, cfg.x_star->size() == n && on_simplex(*cfg.x_star), "target.x_star",
          "must lie on the simplex");
    if (cfg.x_star->size() == n && cfg.p_star.size() == n && on_simplex(*cfg.x_star))
      check(p, is_best_response(*cfg.x_star, cfg.p_star, kSimplexTol), "target",
            "x_star must be a best response to p_star");
  } else {
    check(p, cfg.system == SystemKind::sirs, "target.x_star",
          "\"solve\" is only available for the sirs system");
  }

  check(p, cfg.x0.size() == n && on_simplex(cfg.x0), "initial.x", "must lie on the simplex");
  check(p, cfg.q0.size() == n && cfg.q0.allFinite(), "initial.q",
        "must have one finite entry per strategy");
  if (cfg.y0.size() != 2 || !cfg.y0.allFinite()) {
    p.add("initial.y", "must have two finite entries");
  } else if (cfg.system == SystemKind::sirs) {
    check(p, cfg.y0(0) > 0.0 && cfg.y0(1) >= 0.0 && cfg.y0.sum() <= 1.0, "initial.y",
          "needs I > 0, R >= 0, I + R <= 1");
  } else {
    check(p, cfg.y0(0) > 0.0 && cfg.y0(1) > 0.0, "initial.y", "needs O > 0 and P > 0");
  }

  const auto& in = cfg.integration;
  check(p, positive(in.dt), "integration.dt", "must be positive");
  check(p, in.horizon >= 0.0 && std::isfinite(in.horizon), "integration.horizon",
        "must be nonnegative");
  check(p, positive(in.record_interval), "integration.record_interval", "must be positive");
  check(p, positive(in.conv_tol), "integration.conv_tol", "must be positive");
  check(p, in.dwell_time >= 0.0, "integration.dwell_time", "must be nonnegative");
  if (p.empty()) {
    try {
      in.validate();
    } catch (const InvalidArgument& e) {
      p.add("integration", e.what());
    }
  }

  check(p, cfg.peak_cap > 0.0 && cfg.peak_cap < 1.0, "design.peak_cap", "must be in (0, 1)");
  check(p, cfg.target_grid >= 1, "design.target_grid", "must be >= 1");
  check(p, cfg.resolution.x_divisions >= 1, "design.x_divisions", "must be >= 1");
  check(p, cfg.resolution.infected_samples >= 2, "design.infected_samples", "must be >= 2");
  check(p, positive(cfg.resolution.refine_step_min), "design.refine_step_min",
        "must be positive");
  check(p, cfg.peak_slack >= 0.0, "design.peak_slack", "must be nonnegative");
  for (auto [name, axis] : {std::pair{"sweep.k1", &cfg.sweep_k1}, {"sweep.k2", &cfg.sweep_k2}}) {
    check(p, positive(axis->min) && axis->max >= axis->min && std::isfinite(axis->max), name,
          "needs 0 < min <= max");
    check(p, axis->count >= 1, std::string(name) + ".count", "must be >= 1");
  }
  check(p, cfg.verify_samples >= 1, "verify.samples", "must be >= 1");
  check(p, cfg.verify_box.hi > cfg.verify_box.lo, "verify.payoff_box", "needs lo < hi");
}

}  // namespace

ScenarioConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  json doc = json::parse(text.begin(), text.end(), nullptr, false, true);
  if (doc.is_discarded()) throw ValidationError({"config"}, "configuration is not valid JSON");
  if (!doc.is_object()) throw ValidationError({"config"}, "configuration must be a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);

  ScenarioConfig cfg;
  Problems problems;
  {
    Section root(&doc, "", problems);
    root.string("scenario_id", cfg.scenario_id);
    root.integer("seed", cfg.seed);
    root.string("output_dir", cfg.output_dir);

    // Dimensions first: they decide the defaults of the vector fields.
    bool have_x0 = false;
    {
      Section initial = root.child("initial");
      have_x0 = initial.vector("x", cfg.x0);
      bool have_y0 = initial.vector("y", cfg.y0);
      Vector q;
      if (initial.vector("q", q)) cfg.q0 = q;

      Section system = root.child("system");
      std::string kind = "sirs";
      system.string("kind", kind);
      if (kind == "sirs") {
        cfg.system = SystemKind::sirs;
        system.number("delta", cfg.sirs.delta);
        system.number("zeta", cfg.sirs.zeta);
        system.number("theta", cfg.sirs.theta);
        system.number("gamma", cfg.sirs.gamma);
        system.number("omega_bar", cfg.sirs.omega_bar);
        read_matrix(system, "Q", cfg.sirs.Q);
      } else if (kind == "leslie-gower") {
        cfg.system = SystemKind::leslie_gower;
        system.number("a1", cfg.leslie_gower.a1);
        system.number("a2", cfg.leslie_gower.a2);
        read_affine(system, "z1", cfg.leslie_gower.z1);
        read_affine(system, "z2", cfg.leslie_gower.z2);
        read_affine(system, "b1", cfg.leslie_gower.b1);
        if (!have_y0) cfg.y0 = Vector::Ones(2);
      } else {
        problems.add("system.kind", "must be \"sirs\" or \"leslie-gower\"");
      }
    }
    const auto n = static_cast<Eigen::Index>(cfg.system == SystemKind::sirs
                                                 ? cfg.sirs.Q.rows()
                                                 : cfg.leslie_gower.z1.slope.size());
    if (!have_x0 && n > 0) cfg.x0 = Vector::Unit(n, 0);
    if (n > 0 && n != 3) {
      // The example defaults only fit three strategies.
      if (cfg.costs.size() != n) cfg.costs = Vector::Zero(n);
      if (cfg.p_star.size() != n) cfg.p_star = Vector::Zero(n);
      if (cfg.q0.size() != n) cfg.q0 = Vector::Zero(n);
    }
    if (cfg.system == SystemKind::leslie_gower) cfg.costs = Vector::Zero(cfg.x0.size());

    {
      Section verify = root.child("verify");
      verify.integer("samples", cfg.verify_samples);
      Vector box;
      if (verify.vector("payoff_box", box)) {
        if (box.size() == 2) cfg.verify_box = {box(0), box(1)};
        else problems.add("verify.payoff_box", "must be [lo, hi]");
      }
    }
    read_rules(root, cfg);
    {
      Section gains = root.child("gains");
      gains.number("k1", cfg.k1);
      gains.number("k2", cfg.k2);
      gains.number("k3", cfg.k3);
    }
    {
      Section target = root.child("target");
      if (const json* xs = target.find("x_star")) {
        if (xs->is_string()) {
          if (xs->get<std::string>() == "solve") cfg.x_star.reset();
          else problems.add("target.x_star", "must be \"solve\" or an array");
        } else {
          Vector v;
          if (target.read_vector(*xs, "target.x_star", v)) cfg.x_star = v;
        }
      } else if (cfg.system == SystemKind::leslie_gower) {
        problems.add("target.x_star", "is required for the leslie-gower system");
      }
      target.vector("p_star", cfg.p_star);
    }
    root.vector("costs", cfg.costs);
    root.number("budget", cfg.budget);
    {
      Section in = root.child("integration");
      in.number("horizon", cfg.integration.horizon);
      in.number("dt", cfg.integration.dt);
      in.number("record_interval", cfg.integration.record_interval);
      in.number("conv_tol", cfg.integration.conv_tol);
      in.number("dwell_time", cfg.integration.dwell_time);
      in.boolean("stop_on_convergence", cfg.integration.stop_on_convergence);
    }
    {
      Section design = root.child("design");
      design.number("peak_cap", cfg.peak_cap);
      design.integer("target_grid", cfg.target_grid);
      design.integer("x_divisions", cfg.resolution.x_divisions);
      design.integer("infected_samples", cfg.resolution.infected_samples);
      design.number("refine_step_min", cfg.resolution.refine_step_min);
      design.number("peak_slack", cfg.peak_slack);
    }
    {
      Section sweep = root.child("sweep");
      read_axis(sweep, "k1", cfg.sweep_k1);
      read_axis(sweep, "k2", cfg.sweep_k2);
      sweep.integer("threads", cfg.threads);
    }
  }
  validate(cfg, problems);
  problems.raise();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"config"}, "cannot read configuration " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

std::shared_ptr<const ExoSystem> make_system(const ScenarioConfig& config) {
  if (config.system == SystemKind::sirs) return std::make_shared<SirsSystem>(config.sirs);
  return std::make_shared<LeslieGowerSystem>(config.leslie_gower);
}

DesignProblem make_design_problem(const ScenarioConfig& config) {
  if (config.system != SystemKind::sirs)
    throw ValidationError({"system.kind"}, "design computations need the sirs system");
  DesignProblem p;
  p.sirs = config.sirs;
  p.costs = config.costs;
  p.budget = config.budget;
  p.initial_y = SirsState::from(config.y0);
  p.initial_x = config.x0;
  p.peak_cap = config.peak_cap;
  return p;
}

PopulationState resolve_target(const ScenarioConfig& config) {
  if (config.x_star) return PopulationState::from(*config.x_star);
  return solve_target_state(make_design_problem(config), config.target_grid).x_star;
}

std::vector<Scenario> make_scenarios(const ScenarioConfig& config) {
  const auto system = make_system(config);
  const MechanismGains gains(config.k1, config.k2, config.k3, resolve_target(config),
                             config.p_star, config.costs);
  std::vector<Scenario> out;
  for (const auto& rule : config.rules) {
    Scenario s{system, rule, gains, {config.y0, config.x0, config.q0, 0.0}, config.integration};
    s.id = config.scenario_id;
    s.seed = config.seed;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace edmstab
