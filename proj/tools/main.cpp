#include <edmstab/runner.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop incentive design for evolutionary dynamics"};
  app.require_subcommand(1);

  edmstab::RunOptions options;
  options.log = &std::cerr;
  std::string config, out;
  std::uint64_t seed = 0;

  const auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "random seed (overrides seed)");
    sub->add_option("--override", options.overrides, "KEY=VALUE with a dotted key")
        ->take_all()
        ->allow_extra_args(false);
  };

  struct Entry {
    edmstab::Command command;
    const char* help;
  };
  for (auto [command, help] :
       {Entry{edmstab::Command::simulate, "integrate every configured learning rule"},
        Entry{edmstab::Command::sweep, "tabulate the peak bound over a (k1, k2) grid"},
        Entry{edmstab::Command::design, "solve for the target state and report bounds"},
        Entry{edmstab::Command::verify, "certify learning rules and equilibrium invariants"}}) {
    auto* sub = app.add_subcommand(std::string(edmstab::to_string(command)), help);
    add_flags(sub);
    sub->callback([&options, command = command] { options.command = command; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(edmstab::ExitCode::validation);
  }

  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--config")) options.config = config;
    if (sub->count("--out")) options.out_dir = out;
    if (sub->count("--seed")) options.seed = seed;
  }

  const auto result = edmstab::run(options);
  for (const auto& f : result.files) std::cout << f.string() << '\n';
  return static_cast<int>(result.code);
}
