#pragma once

// Experiment configuration: line-oriented text with [section] headers and
// `key = value` pairs. Unknown sections and keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "qkd/analytics.hpp"
#include "qkd/attacks.hpp"
#include "qkd/protocols.hpp"

namespace qkd::cli {

struct DistillSection {
  double sample_fraction = 0.1;
  double target_error = 1e-4;
  int pa_rounds = 0;
};

enum class SweepMode { Rate, Repeater };

struct SweepSection {
  std::string variable = "length";
  double min = 0.0;
  double max = 100.0;
  double step = 1.0;
  SweepMode mode = SweepMode::Rate;
  int n_sections = 1;
  analytics::EveAccounting accounting = analytics::EveAccounting::Individual;
  bool monte_carlo = false;
};

struct ExperimentConfig {
  analytics::SystemParams system;
  double mu_eff = 2.0 / 3.0;

  protocols::ProtocolKind protocol = protocols::ProtocolKind::BB84;
  std::size_t n_pulses = 100000;
  std::uint64_t seed = 1;
  double b92_angle = M_PI / 4;

  attacks::AttackStrategy attack = attacks::NoAttack{};

  std::optional<DistillSection> distill;
  std::optional<SweepSection> sweep;
};

/// Parses and validates; throws ConfigError naming the offending field.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Session settings implied by the config (the fiber length is taken from
/// [system] length).
protocols::SessionConfig to_session(const ExperimentConfig& cfg);

/// Analytic QBER and Eve information predicted for the configured attack.
attacks::AttackPrediction predicted_attack(const ExperimentConfig& cfg);

}  // namespace qkd::cli
