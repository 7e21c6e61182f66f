#pragma once

// Classical post-processing of sifted keys: QBER estimation, pairwise-parity
// error correction, XOR privacy amplification, advantage distillation and
// the Csiszar-Korner secret-rate bound.

#include <cstddef>
#include <stdexcept>

#include "qkd/attacks.hpp"
#include "qkd/infomath.hpp"

namespace qkd::distill {

struct DistillationReport {
  std::size_t initial_length = 0;
  std::size_t final_length = 0;
  double residual_error = 0.0;
  double eve_info_before = 0.0;  // bits per bit
  double eve_info_after = 0.0;
  std::size_t disclosed_bits = 0;  // parities or sample bits announced publicly
  int rounds = 0;
};

struct KeyPair {
  BitString alice;
  BitString bob;
};

struct QberEstimate {
  double estimate = 0.0;
  std::size_t sample_size = 0;
  KeyPair remaining;
};

/// Publicly compares a random subset and discards it from both keys.
QberEstimate estimate_qber(const BitString& key_a, const BitString& key_b, double sample_fraction, Rng& rng);

double empirical_error_rate(const BitString& key_a, const BitString& key_b);

/// Error rate after one parity round, D^2 / (D^2 + (1-D)^2).
double parity_round_map(double error_rate);

struct CorrectionResult {
  KeyPair keys;
  DistillationReport report;
};

class CorrectionFailed : public std::runtime_error {
 public:
  CorrectionFailed(const std::string& what, DistillationReport report)
      : std::runtime_error(what), report_(report) {}
  const DistillationReport& report() const noexcept { return report_; }

 private:
  DistillationReport report_;
};

/// Pairwise-parity error correction. Each round pairs bits at random; equal
/// parities keep the first bit, differing parities drop both. Rounds repeat
/// until the error rate inferred from the parity mismatches falls to
/// `target_error`. `eve_info` is Eve's prior information per bit; each
/// announced parity is added to it as a fully leaked bit.
CorrectionResult parity_error_correct(const BitString& key_a, const BitString& key_b, Rng& rng,
                                      double target_error, double eve_info = 0.0);

/// Eve's guess probability after one XOR round: g^2 + (1-g)^2.
double xor_guess_map(double guess);

struct AmplificationResult {
  BitString key;
  double eve_guess = 0.5;
  DistillationReport report;
};

/// Replaces random disjoint pairs by their XOR, `rounds` times. Apply the
/// same rng seed on both sides to keep the keys aligned.
AmplificationResult privacy_amplify_xor(const BitString& key, double eve_guess, int rounds, Rng& rng);

/// max(I_AB - I_AE, I_AB - I_BE); negative means the protocol must stop.
double csiszar_korner_rate(double i_ab, double i_ae, double i_be);

struct AdvantageResult {
  double bob_error = 0.0;
  double eve_error = 0.0;
  double acceptance_prob = 0.0;
};

/// Exact enumeration of the repetition-code advantage distillation: Bob
/// accepts a block only if all his bits agree, Eve votes by majority.
AdvantageResult advantage_distillation(const attacks::JointDistribution& joint, int block_n);

}  // namespace qkd::distill
