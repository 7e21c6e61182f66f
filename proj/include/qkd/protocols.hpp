#pragma once

// Monte Carlo engines for BB84-family sessions, sifting, and the
// phase-coding truth table.

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "qkd/attacks.hpp"
#include "qkd/infomath.hpp"
#include "qkd/photonics.hpp"

namespace qkd::protocols {

enum class ProtocolKind { BB84, B92, SixState, EPR_BB84, Ekert3Basis };

const char* to_string(ProtocolKind kind);
std::optional<ProtocolKind> parse_protocol(std::string_view text);

/// Compact basis label stored per pulse. D45/D135 are the custom bases at
/// great-circle angles pi/4 and 3pi/4; B92 marks a conclusive B92 test.
enum class BasisTag : std::uint8_t { Z, X, Y, D45, D135, B92 };

MeasurementBasis to_basis(BasisTag tag);

/// Bases Alice and Bob draw from, uniformly and independently.
struct BasisSets {
  std::vector<BasisTag> alice;
  std::vector<BasisTag> bob;
};
BasisSets basis_sets(ProtocolKind kind);

using Source = std::variant<photonics::FaintPulseSource, photonics::PairSource>;

struct SessionConfig {
  ProtocolKind protocol = ProtocolKind::BB84;
  std::size_t n_pulses = 10000;
  Source source = photonics::FaintPulseSource{};
  photonics::FiberChannel channel{};
  photonics::Detector detector{};
  int n_det = 2;
  double q = 1.0;
  Probability p_opt = 0.0;  // probability a photon ends up in the wrong detector
  attacks::AttackStrategy attack = attacks::NoAttack{};
  std::uint64_t seed = 1;
  double b92_angle = M_PI / 4;  // angle between the two B92 polarization states
  bool keep_records = true;

  void validate() const;
};

struct PulseRecord {
  std::uint8_t alice_bit = 0;
  BasisTag alice_basis = BasisTag::Z;
  BasisTag bob_basis = BasisTag::Z;
  bool detected = false;
  std::int8_t bob_bit = -1;  // -1 when not detected
  std::int8_t eve_bit = -1;  // -1 when Eve holds no guess for this pulse
  bool multiphoton = false;
  bool dark_count_origin = false;
  bool accidental_pair = false;

  bool sifted() const { return detected && alice_basis == bob_basis; }
};

struct SessionResult {
  std::vector<PulseRecord> records;
  std::size_t n_pulses = 0;
  std::size_t raw_count = 0;
  std::size_t sifted_count = 0;
  std::size_t error_count = 0;
  std::size_t raw_error_count = 0;      // detected pulses with bob_bit != alice_bit, any basis
  std::size_t eve_guessed_sifted = 0;   // sifted pulses on which Eve holds a guess
  std::size_t eve_correct_sifted = 0;
  double qber_estimate = 0.0;

  double sift_ratio() const { return raw_count ? double(sifted_count) / double(raw_count) : 0.0; }
  double eve_agreement() const {
    return eve_guessed_sifted ? double(eve_correct_sifted) / double(eve_guessed_sifted) : 0.0;
  }
};

SessionResult run_session(const SessionConfig& cfg);
SessionResult run_b92_session(const SessionConfig& cfg);
SessionResult run_epr_session(const SessionConfig& cfg);

std::pair<BitString, BitString> sift(const std::vector<PulseRecord>& records);

/// Probability that independently chosen bases agree; nullopt for B92, whose
/// key fraction is governed by conclusive outcomes instead.
std::optional<double> basis_match_prob(ProtocolKind kind);

struct PhaseOutcome {
  bool compatible = false;
  std::optional<int> bit;
};

/// Phase-coding truth table: Alice phase in {0, pi/2, pi, 3pi/2}, Bob phase
/// in {0, pi/2}.
PhaseOutcome phase_to_outcome(double phi_alice, double phi_bob);

}  // namespace qkd::protocols
