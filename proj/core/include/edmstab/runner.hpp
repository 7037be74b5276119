#pragma once

#include "edmstab/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace edmstab {

enum class Command { simulate, sweep, design, verify };

std::string_view to_string(Command command);
/// Throws InvalidArgument for unknown names.
Command parse_command(std::string_view name);

/// Process exit codes. When several findings occur in one run the smallest
/// nonzero code wins, except that runtime errors (1) only apply when
/// nothing else was found.
enum class ExitCode : int {
  ok = 0,
  runtime_error = 1,
  validation = 2,
  divergence = 3,
  bound_violation = 4,
};

struct RunOptions {
  Command command = Command::simulate;
  std::optional<std::filesystem::path> config;  // built-in defaults when empty
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::ostream* log = nullptr;
};

struct RunResult {
  ExitCode code = ExitCode::ok;
  std::vector<std::string> findings;
  std::vector<std::filesystem::path> files;  // in the order they were written
};

/// Loads the configuration and runs one command. Never throws; failures are
/// reported through the exit code and findings.
RunResult run(const RunOptions& options);

/// Runs a command on an already validated configuration, writing into
/// config.output_dir.
RunResult run(Command command, const ScenarioConfig& config, std::ostream* log = nullptr);

}  // namespace edmstab
