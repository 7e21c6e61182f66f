#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

namespace qkd::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kConfigFailure = 2, kComparisonFailure = 3 };

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> pulses;
  unsigned threads = 1;

  // compare: added to the analytic QBER to check that the harness trips
  double corrupt_expectation = 0.0;

  // repeater: curves for 1..sections
  int sections = 3;

  // distill-demo without a config: synthetic keys
  double error_rate = 0.25;
  std::size_t bits = 100000;
  double eve_guess = 0.6;
};

int cmd_simulate(const CommandOptions& opts, std::ostream& out);
int cmd_sweep(const CommandOptions& opts, std::ostream& out);
int cmd_thresholds(const CommandOptions& opts, std::ostream& out);
int cmd_compare(const CommandOptions& opts, std::ostream& out);
int cmd_repeater(const CommandOptions& opts, std::ostream& out);
int cmd_distill_demo(const CommandOptions& opts, std::ostream& out);

/// Dispatches by subcommand name and maps exceptions to exit codes,
/// writing the message to `err`.
int run_command(std::string_view name, const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace qkd::cli
