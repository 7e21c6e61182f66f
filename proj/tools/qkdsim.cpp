#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qkd/cli/commands.hpp"

int main(int argc, char** argv) {
  qkd::cli::CommandOptions opts;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t pulses = 0;

  CLI::App app{"BB84-family key distribution simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  auto* config_opt = app.add_option("--config", config, "experiment config file");
  auto* out_opt = app.add_option("--out", out, "CSV output path");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  auto* pulses_opt = app.add_option("--pulses", pulses, "number of pulses (overrides the config)");
  app.add_option("--threads", opts.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);

  app.add_subcommand("simulate", "run a session and distill the key");
  app.add_subcommand("sweep", "rate model over the [sweep] grid");
  app.add_subcommand("thresholds", "security thresholds on the error rate");
  auto* compare = app.add_subcommand("compare", "analytic vs Monte Carlo statistics");
  compare->add_option("--corrupt-expectation", opts.corrupt_expectation, "offset added to the analytic QBER");
  auto* repeater = app.add_subcommand("repeater", "segmented-link net rate curves");
  repeater->add_option("--sections", opts.sections, "largest section count")->check(CLI::PositiveNumber);
  auto* demo = app.add_subcommand("distill-demo", "parity error correction and XOR amplification");
  demo->add_option("--error-rate", opts.error_rate, "error rate of the synthetic keys");
  demo->add_option("--bits", opts.bits, "length of the synthetic keys");
  demo->add_option("--eve-guess", opts.eve_guess, "Eve's initial guess probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qkd::cli::kConfigFailure;
  }

  if (*config_opt) opts.config = config;
  if (*out_opt) opts.out = out;
  if (*seed_opt) opts.seed = seed;
  if (*pulses_opt) opts.pulses = pulses;
  const std::string name = app.get_subcommands().front()->get_name();
  return qkd::cli::run_command(name, opts, std::cout, std::cerr);
}
