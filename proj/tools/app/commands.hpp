#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "app/config.hpp"

namespace spdelab::app {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumeric = 2, kExitIo = 3 };

struct CommandOptions {
  std::string command;
  std::filesystem::path config;  // empty: built-in defaults
  std::vector<std::string> overrides;
  std::optional<int> paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool plots = false;
};

/// The effective configuration: file (or defaults), then --set overrides,
/// then the dedicated flags.
ExperimentConfig effective_config(const CommandOptions& options);

/// Runs one command and maps errors to exit codes (1 config, 2 numeric, 3 I/O).
int run_command(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Command-line entry point.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace spdelab::app
