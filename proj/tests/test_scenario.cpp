#include <doctest.h>

#include <edmstab/errors.hpp>
#include <edmstab/outputs.hpp>
#include <edmstab/runner.hpp>
#include <edmstab/scenario.hpp>

#include "test_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace edmstab;
using edmstab::testing::max_abs_diff;
using edmstab::testing::vec;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(EDMSTAB_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("edmstab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  for (const auto& line : lines(text)) {
    const auto eq = line.find('=');
    REQUIRE(eq != std::string::npos);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::vector<std::string> keys_of(const std::string& text, const std::vector<std::string>& ov) {
  try {
    parse_config(text, ov);
  } catch (const ValidationError& e) {
    return e.keys();
  }
  return {};
}

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// Short run of the example: enough to exercise every output path quickly.
ScenarioConfig short_example(const fs::path& out) {
  auto cfg = load_config(kConfigs / "example1.json",
                         {"integration.horizon=50", "design.x_divisions=30"});
  cfg.output_dir = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("empty configuration yields the built-in example") {
  const auto cfg = parse_config("{}");
  CHECK(cfg.system == SystemKind::sirs);
  CHECK(cfg.rules.size() == 4);
  CHECK(cfg.k1 == 2.0);
  CHECK(cfg.k2 == 0.022);
  CHECK_FALSE(cfg.x_star);
  CHECK(cfg.strategies() == 3);
  CHECK(cfg.rules[0].tau_bar == cfg.rules[0].max_rate(4.0));
}

TEST_CASE("shipped configurations parse") {
  const auto ex = load_config(kConfigs / "example1.json");
  CHECK(ex.budget == 0.1);
  CHECK(ex.sirs.Q(2, 2) == 0.5);
  CHECK(ex.rules.size() == 4);
  CHECK(ex.rules[1].kind == RuleKind::smith_saturated);
  const auto naive = load_config(kConfigs / "example1_naive.json");
  CHECK(naive.k1 == 1.0);
  CHECK(naive.k2 == 1.0);
  const auto lg = load_config(kConfigs / "leslie_gower.json");
  CHECK(lg.system == SystemKind::leslie_gower);
  REQUIRE(lg.x_star);
  CHECK(max_abs_diff(*lg.x_star, vec({0.3, 0.3, 0.4})) == 0.0);
  CHECK(lg.costs.isZero(0.0));
}

TEST_CASE("validation names every offending key") {
  const auto keys = keys_of(R"({"gains": {"k1": 0, "k2": "x"}, "foo": 1, "initial": {"z": 0}})", {});
  CHECK(has(keys, "gains.k1"));
  CHECK(has(keys, "gains.k2"));
  CHECK(has(keys, "foo"));
  CHECK(has(keys, "initial.z"));

  CHECK(has(keys_of("{}", {"gains.k3=-1"}), "gains.k3"));
  CHECK(has(keys_of("{}", {"initial.x=[0.5, 0.6, 0]"}), "initial.x"));
  CHECK(has(keys_of("{}", {"costs=[0.1, 0.2]"}), "costs"));
  CHECK(has(keys_of("{}", {"integration.record_interval=0.07"}), "integration"));
  CHECK(has(keys_of("{}", {"rules=[\"gradient\"]"}), "rules[0].kind"));
  CHECK(has(keys_of("{}", {"system.kind=\"lotka\""}), "system.kind"));
  CHECK(has(keys_of("{}", {"target.x_star=[0.2, 0.2, 0.2]"}), "target.x_star"));
  CHECK(has(keys_of("{}", {"design.peak_cap=1.5"}), "design.peak_cap"));
  CHECK(has(keys_of("{", {}), "config"));
  // A target that is not a best response to p*.
  CHECK(has(keys_of("{}", {"target.x_star=[1,0,0]", "target.p_star=[0,1,0]"}), "target"));
  // Host-parasite runs must name their target.
  CHECK(has(keys_of(slurp(kConfigs / "leslie_gower.json"), {"target.x_star=solve"}),
            "target.x_star"));
  CHECK_THROWS_AS(load_config(kConfigs / "missing.json"), ValidationError);
}

TEST_CASE("overrides use dotted paths and JSON values") {
  const auto cfg = parse_config(slurp(kConfigs / "example1.json"),
                                {"gains.k1=4", "costs.1=0.15", "target.x_star=[0.2,0.3,0.5]",
                                 "scenario_id=run-a", "integration.stop_on_convergence=true",
                                 "sweep.k2.count=3"});
  CHECK(cfg.k1 == 4.0);
  CHECK(cfg.costs(1) == 0.15);
  REQUIRE(cfg.x_star);
  CHECK((*cfg.x_star)(2) == 0.5);
  CHECK(cfg.scenario_id == "run-a");
  CHECK(cfg.integration.stop_on_convergence);
  CHECK(cfg.sweep_k2.count == 3);

  const auto back = parse_config(R"({"target": {"x_star": [0.2, 0.3, 0.5]}})",
                                 {"target.x_star=solve"});
  CHECK_FALSE(back.x_star);

  CHECK_THROWS_AS(parse_config("{}", {"gains.k1"}), ValidationError);
  CHECK_THROWS_AS(parse_config("{}", {"costs.1=1"}), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"costs": [0, 0, 0]})", {"costs.7=1"}), ValidationError);
  CHECK_THROWS_AS(parse_config("{}", {"gains..k1=1"}), ValidationError);
}

TEST_CASE("rule objects override preset parameters") {
  const auto cfg = parse_config(
      R"({"rules": ["bnn", {"kind": "smith-saturated", "saturation": 0.2},
                    {"kind": "smith", "tau_bar": 123}],
          "verify": {"payoff_box": [-1, 1]}})");
  REQUIRE(cfg.rules.size() == 3);
  CHECK(cfg.rules[0].tau_bar == cfg.rules[0].max_rate(2.0));
  CHECK(cfg.rules[1].saturation == 0.2);
  CHECK(cfg.rules[1].rate_scale == LearningRule::smith_saturated().rate_scale);
  CHECK(cfg.rules[2].tau_bar == 123.0);
}

TEST_CASE("scenarios follow the configured rules") {
  auto cfg = parse_config("{}", {"rules=[\"bnn\", \"smith\"]"});
  const auto scenarios = make_scenarios(cfg);
  REQUIRE(scenarios.size() == 2);
  CHECK(scenarios[0].rule.kind == RuleKind::bnn);
  CHECK(scenarios[1].rule.kind == RuleKind::smith);
  CHECK(max_abs_diff(scenarios[0].gains.x_star().values(), vec({1.0 / 12, 10.0 / 12, 1.0 / 12})) <
        1e-3);
  CHECK(scenarios[0].initial.y(0) == 0.019);
  CHECK(scenarios[0].settings.horizon == cfg.integration.horizon);

  const auto lg = load_config(kConfigs / "leslie_gower.json");
  CHECK_THROWS_AS(make_design_problem(lg), ValidationError);
  CHECK(make_system(lg)->name() != make_system(cfg)->name());
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(-0.0) == "-0");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  for (double v : {1.0 / 3.0, 1e-300, 6.02214076e23, -0.0123456789012345678})
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("simulate writes one trajectory per rule and a summary") {
  const auto dir = scratch("simulate");
  const auto cfg = short_example(dir);
  const auto result = run(Command::simulate, cfg);
  REQUIRE(result.code == ExitCode::ok);
  CHECK(result.findings.empty());
  CHECK(result.files.size() == 5);

  const std::string header =
      "t,I,R,x_1,x_2,x_3,q_1,q_2,q_3,p_1,p_2,p_3,r_1,r_2,r_3,cost,L_total,U,V_norm";
  for (const char* rule : {"smith", "smith-saturated", "bnn", "bnn-power"}) {
    const std::string text = slurp(dir / (std::string("trajectory_") + rule + ".csv"));
    INFO(rule);
    CHECK(text.find('\r') == std::string::npos);
    const auto rows = lines(text);
    REQUIRE(rows.size() == 52);
    CHECK(rows[0] == header);
    for (std::size_t k = 1; k < rows.size(); ++k) {
      const auto cells = split(rows[k], ',');
      REQUIRE(cells.size() == 19);
      REQUIRE(std::strtod(cells[0].c_str(), nullptr) == static_cast<double>(k - 1));
      const bool withheld = cells[16] == "nan";
      REQUIRE(withheld == (std::string(rule) == "smith-saturated" ||
                           std::string(rule) == "bnn-power"));
    }
  }

  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["command"] == "simulate");
  CHECK(summary["exit_code"] == 0);
  REQUIRE(summary["runs"].size() == 4);
  CHECK(summary["runs"][2]["rule"] == "bnn");
  CHECK(summary["bounds"]["I_max"].get<double>() <= 0.1);
}

TEST_CASE("zero horizon gives the header and the initial row") {
  const auto dir = scratch("empty");
  auto cfg = short_example(dir);
  cfg.integration.horizon = 0;
  cfg.rules = {LearningRule::smith()};
  REQUIRE(run(Command::simulate, cfg).code == ExitCode::ok);
  const auto rows = lines(slurp(dir / "trajectory_smith.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(split(rows[1], ',')[0] == "0");
  CHECK(split(rows[1], ',')[1] == "0.019");
}

TEST_CASE("reruns are byte-identical") {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  auto cfg = short_example(a);
  REQUIRE(run(Command::simulate, cfg).code == ExitCode::ok);
  cfg.output_dir = b.string();
  REQUIRE(run(Command::simulate, cfg).code == ExitCode::ok);
  for (const auto& entry : fs::directory_iterator(a)) {
    INFO(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  }

  const auto c = scratch("rerun_c");
  const auto d = scratch("rerun_d");
  auto v = short_example(c);
  v.verify_samples = 500;
  REQUIRE(run(Command::verify, v).code == ExitCode::ok);
  v.output_dir = d.string();
  REQUIRE(run(Command::verify, v).code == ExitCode::ok);
  CHECK(slurp(c / "verify.txt") == slurp(d / "verify.txt"));
}

TEST_CASE("design summary") {
  const auto dir = scratch("design");
  const auto result = run(Command::design, short_example(dir));
  REQUIRE(result.code == ExitCode::ok);
  const auto kv = key_values(slurp(dir / "design.txt"));
  CHECK(std::abs(std::stod(kv.at("x_star_1")) - 1.0 / 12) < 1e-3);
  CHECK(std::abs(std::stod(kv.at("x_star_2")) - 10.0 / 12) < 1e-3);
  CHECK(std::abs(std::stod(kv.at("x_star_3")) - 1.0 / 12) < 1e-3);
  CHECK(std::abs(std::stod(kv.at("budget_used")) - 0.1) < 1e-6);
  CHECK(kv.at("budget_active") == "1");
  CHECK(std::abs(std::stod(kv.at("I_star")) - 0.051) < 2e-3);
  CHECK(std::abs(std::stod(kv.at("R_star")) - 0.469) < 2e-3);
  CHECK(std::stod(kv.at("I_max")) <= 0.1);
  CHECK(kv.at("peak_feasible") == "1");
  CHECK(kv.count("cost_bound") == 1);
}

TEST_CASE("sweep table") {
  const auto dir = scratch("sweep");
  auto cfg = short_example(dir);
  cfg.sweep_k1 = {1.0, 2.0, 2, false};
  cfg.sweep_k2 = {0.022, 1.0, 2, false};
  cfg.threads = 2;
  REQUIRE(run(Command::sweep, cfg).code == ExitCode::ok);
  const auto rows = lines(slurp(dir / "sweep.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "k1,k2,I_max,feasible");
  std::map<std::pair<double, double>, int> feasible;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto cells = split(rows[k], ',');
    REQUIRE(cells.size() == 4);
    const double i_max = std::stod(cells[2]);
    CHECK((cells[3] == "1") == (i_max <= 0.1));
    feasible[{std::stod(cells[0]), std::stod(cells[1])}] = std::stoi(cells[3]);
  }
  CHECK(split(rows[1], ',')[0] == "1");
  CHECK(split(rows[2], ',')[1] == "1");
  CHECK(feasible.at({2.0, 0.022}) == 1);
  CHECK(feasible.at({1.0, 1.0}) == 0);
}

TEST_CASE("exit codes") {
  SUBCASE("validation") {
    RunOptions o;
    o.out_dir = scratch("exit_validation");
    o.overrides = {"gains.k1=0"};
    const auto r = run(o);
    CHECK(r.code == ExitCode::validation);
    CHECK(r.findings.at(0).find("gains.k1") != std::string::npos);
    CHECK_FALSE(fs::exists(*o.out_dir));
  }
  SUBCASE("divergence keeps the partial trajectory") {
    const auto dir = scratch("exit_divergence");
    auto cfg = short_example(dir);
    cfg.rules = {LearningRule::bnn()};
    cfg.k3 = 50;
    cfg.integration.dt = 20;
    cfg.integration.record_interval = 20;
    cfg.integration.horizon = 400;
    const auto r = run(Command::simulate, cfg);
    CHECK(r.code == ExitCode::divergence);
    CHECK(lines(slurp(dir / "trajectory_bnn.csv")).size() >= 2);
    CHECK(nlohmann::json::parse(slurp(dir / "summary.json"))["runs"][0]["status"] == "diverged");
  }
  SUBCASE("bound violation") {
    const auto dir = scratch("exit_bound");
    auto cfg = short_example(dir);
    cfg.k1 = 1.0;
    cfg.k2 = 1.0;
    CHECK(run(Command::design, cfg).code == ExitCode::bound_violation);
    CHECK(key_values(slurp(dir / "design.txt")).at("peak_feasible") == "0");

    // A declared rate bound below the true maximum fails certification.
    auto v = short_example(scratch("exit_verify"));
    v.rules = {LearningRule::smith()};
    v.rules[0].tau_bar = 0.5;
    v.verify_samples = 500;
    CHECK(run(Command::verify, v).code == ExitCode::bound_violation);
  }
  SUBCASE("output failure") {
    const auto dir = scratch("exit_io");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    auto cfg = short_example(dir / "file" / "sub");
    cfg.integration.horizon = 0;
    CHECK(run(Command::simulate, cfg).code == ExitCode::runtime_error);
  }
  SUBCASE("design needs the epidemic model") {
    auto cfg = load_config(kConfigs / "leslie_gower.json");
    cfg.output_dir = scratch("exit_lg").string();
    CHECK(run(Command::sweep, cfg).code == ExitCode::validation);
  }
}

TEST_CASE("command names") {
  for (Command c : {Command::simulate, Command::sweep, Command::design, Command::verify})
    CHECK(parse_command(to_string(c)) == c);
  CHECK_THROWS_AS(parse_command("plot"), InvalidArgument);
}
