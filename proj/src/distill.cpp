#include "qkd/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace qkd::distill {

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

void require_same_length(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) throw DomainError("keys differ in length");
}

/// Per-bit error rate D implied by a parity mismatch rate 2 D (1 - D).
double error_from_parity_mismatch(double mismatch) {
  return (1.0 - std::sqrt(std::max(0.0, 1.0 - 2.0 * mismatch))) / 2.0;
}

}  // namespace

double empirical_error_rate(const BitString& key_a, const BitString& key_b) {
  require_same_length(key_a, key_b);
  if (key_a.empty()) return 0.0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < key_a.size(); ++i) errors += key_a[i] != key_b[i];
  return double(errors) / double(key_a.size());
}

QberEstimate estimate_qber(const BitString& key_a, const BitString& key_b, double sample_fraction, Rng& rng) {
  require_same_length(key_a, key_b);
  if (!(sample_fraction > 0.0 && sample_fraction < 1.0)) {
    throw DomainError("estimate_qber: sample fraction must lie in (0, 1)");
  }
  const auto sample = static_cast<std::size_t>(std::llround(sample_fraction * double(key_a.size())));
  if (sample == 0) throw EstimationError("estimate_qber: sample is empty");

  const auto idx = shuffled_indices(key_a.size(), rng);
  std::vector<bool> disclosed(key_a.size(), false);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < sample; ++i) {
    disclosed[idx[i]] = true;
    mismatches += key_a[idx[i]] != key_b[idx[i]];
  }
  QberEstimate out;
  out.estimate = double(mismatches) / double(sample);
  out.sample_size = sample;
  for (std::size_t i = 0; i < key_a.size(); ++i) {
    if (disclosed[i]) continue;
    out.remaining.alice.push_back(key_a[i]);
    out.remaining.bob.push_back(key_b[i]);
  }
  return out;
}

double parity_round_map(double d) {
  if (!(d >= 0.0 && d <= 1.0)) throw DomainError("parity_round_map: error rate outside [0,1]");
  const double right = (1.0 - d) * (1.0 - d);
  return d * d / (d * d + right);
}

CorrectionResult parity_error_correct(const BitString& key_a, const BitString& key_b, Rng& rng,
                                      double target_error, double eve_info) {
  require_same_length(key_a, key_b);
  if (key_a.size() < 2) throw DomainError("parity_error_correct: keys need at least 2 bits");
  if (!(target_error >= 0.0 && target_error <= 1.0)) throw DomainError("parity_error_correct: target outside [0,1]");

  DistillationReport report;
  report.initial_length = key_a.size();
  report.eve_info_before = eve_info;

  KeyPair cur{key_a, key_b};
  for (;;) {
    if (cur.alice.size() < 2) {
      report.final_length = cur.alice.size();
      report.residual_error = empirical_error_rate(cur.alice, cur.bob);
      report.eve_info_after = 1.0;
      throw CorrectionFailed("parity_error_correct: key exhausted before reaching the target error", report);
    }
    const auto idx = shuffled_indices(cur.alice.size(), rng);
    const std::size_t pairs = idx.size() / 2;
    KeyPair next;
    std::size_t mismatches = 0;
    for (std::size_t p = 0; p < pairs; ++p) {
      const std::size_t i = idx[2 * p];
      const std::size_t j = idx[2 * p + 1];
      if ((cur.alice[i] ^ cur.alice[j]) == (cur.bob[i] ^ cur.bob[j])) {
        next.alice.push_back(cur.alice[i]);
        next.bob.push_back(cur.bob[i]);
      } else {
        ++mismatches;
      }
    }
    report.disclosed_bits += pairs;
    ++report.rounds;
    cur = std::move(next);

    const double implied = error_from_parity_mismatch(double(mismatches) / double(pairs));
    if (parity_round_map(implied) <= target_error) break;
  }
  report.final_length = cur.alice.size();
  report.residual_error = empirical_error_rate(cur.alice, cur.bob);
  // every announced parity counts as one bit handed to Eve
  const double leaked = eve_info * double(report.initial_length) + double(report.disclosed_bits);
  report.eve_info_after = report.final_length ? std::min(1.0, leaked / double(report.final_length)) : 1.0;
  return {std::move(cur), report};
}

double xor_guess_map(double g) {
  if (!(g >= 0.0 && g <= 1.0)) throw DomainError("xor_guess_map: probability outside [0,1]");
  return g * g + (1.0 - g) * (1.0 - g);
}

AmplificationResult privacy_amplify_xor(const BitString& key, double eve_guess, int rounds, Rng& rng) {
  if (!(eve_guess >= 0.5 && eve_guess <= 1.0)) {
    throw DomainError("privacy_amplify_xor: Eve's guess probability must lie in [0.5, 1]");
  }
  if (rounds < 0) throw UsageError("privacy_amplify_xor: negative round count");
  const int max_rounds = key.empty() ? 0 : static_cast<int>(std::floor(std::log2(double(key.size()))));
  if (rounds > max_rounds) throw UsageError("privacy_amplify_xor: more rounds than log2(key length)");

  AmplificationResult out;
  out.key = key;
  out.eve_guess = eve_guess;
  out.report.initial_length = key.size();
  out.report.eve_info_before = 1.0 - binary_entropy(eve_guess);
  for (int r = 0; r < rounds; ++r) {
    const auto idx = shuffled_indices(out.key.size(), rng);
    BitString next(idx.size() / 2);
    for (std::size_t p = 0; p < next.size(); ++p) next[p] = out.key[idx[2 * p]] ^ out.key[idx[2 * p + 1]];
    out.key = std::move(next);
    out.eve_guess = xor_guess_map(out.eve_guess);
  }
  out.report.rounds = rounds;
  out.report.final_length = out.key.size();
  out.report.eve_info_after = 1.0 - binary_entropy(out.eve_guess);
  return out;
}

double csiszar_korner_rate(double i_ab, double i_ae, double i_be) { return std::max(i_ab - i_ae, i_ab - i_be); }

AdvantageResult advantage_distillation(const attacks::JointDistribution& joint, int block_n) {
  if (block_n < 1 || block_n % 2 == 0) throw UsageError("advantage_distillation: block size must be odd and >= 1");

  // probability that a Binomial(n, p) count exceeds n/2
  auto majority_wrong = [block_n](double p) {
    double total = 0.0;
    for (int k = block_n / 2 + 1; k <= block_n; ++k) {
      total += std::exp(std::lgamma(block_n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(block_n - k + 1.0)) *
               std::pow(p, k) * std::pow(1.0 - p, block_n - k);
    }
    return total;
  };

  double accept = 0.0;
  double bob_wrong = 0.0;
  double eve_wrong = 0.0;
  for (int a = 0; a < 2; ++a) {
    const double pa = joint(a, 0, 0) + joint(a, 0, 1) + joint(a, 1, 0) + joint(a, 1, 1);
    if (pa <= 0.0) continue;
    for (int b = 0; b < 2; ++b) {
      const double pab = joint(a, b, 0) + joint(a, b, 1);
      if (pab <= 0.0) continue;
      const double weight = pa * std::pow(pab / pa, block_n);
      const double eve_symbol_wrong = joint(a, b, 1 - a) / pab;
      accept += weight;
      if (b != a) bob_wrong += weight;
      eve_wrong += weight * majority_wrong(eve_symbol_wrong);
    }
  }
  if (accept <= 0.0) return {};
  return {bob_wrong / accept, eve_wrong / accept, accept};
}

}  // namespace qkd::distill
