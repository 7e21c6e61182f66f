#include <cmath>

#include <gtest/gtest.h>

#include "qkd/distill.hpp"
#include "qkd/protocols.hpp"
#include "stats.hpp"

using namespace qkd;
using namespace qkd::distill;

namespace {

KeyPair noisy_keys(std::size_t n, double d, std::uint64_t seed) {
  Rng rng(seed);
  KeyPair k;
  k.alice.resize(n);
  k.bob.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    k.alice[i] = static_cast<std::uint8_t>(random_bit(rng));
    k.bob[i] = k.alice[i] ^ static_cast<std::uint8_t>(bernoulli(rng, d));
  }
  return k;
}

// kept pairs: both right (1-D)^2 or both wrong D^2; the kept bit is wrong in
// the second case only
double parity_oracle(double d) {
  const double both_right = (1 - d) * (1 - d);
  const double both_wrong = d * d;
  return both_wrong / (both_right + both_wrong);
}

}  // namespace

TEST(EstimateQber, Trivial) {
  Rng rng(1);
  const auto k = noisy_keys(1000, 0.0, 2);
  const auto e = estimate_qber(k.alice, k.alice, 0.2, rng);
  EXPECT_EQ(e.estimate, 0.0);
  EXPECT_EQ(e.sample_size, 200u);
  EXPECT_EQ(e.remaining.alice.size(), 800u);

  BitString flipped = k.alice;
  for (auto& b : flipped) b ^= 1;
  EXPECT_EQ(estimate_qber(k.alice, flipped, 0.2, rng).estimate, 1.0);
}

TEST(EstimateQber, BinomialBand) {
  Rng rng(3);
  const auto k = noisy_keys(100000, 0.1, 4);
  const auto e = estimate_qber(k.alice, k.bob, 0.1, rng);
  EXPECT_EQ(e.sample_size, 10000u);
  EXPECT_NEAR(e.estimate, 0.1, 0.012);
}

TEST(EstimateQber, DisclosedBitsRemoved) {
  Rng rng(5);
  const auto k = noisy_keys(5000, 0.2, 6);
  const auto e = estimate_qber(k.alice, k.bob, 0.3, rng);
  EXPECT_EQ(e.remaining.alice.size() + e.sample_size, 5000u);
  EXPECT_EQ(e.remaining.alice.size(), e.remaining.bob.size());
}

TEST(EstimateQber, Errors) {
  Rng rng(7);
  BitString a(10, 0);
  EXPECT_THROW(estimate_qber(a, a, 0.01, rng), EstimationError);
  EXPECT_THROW(estimate_qber(a, BitString(9, 0), 0.5, rng), DomainError);
  EXPECT_THROW(estimate_qber(a, a, 1.0, rng), DomainError);
}

TEST(ParityMap, ClosedForm) {
  EXPECT_NEAR(parity_round_map(0.25), 0.1, 1e-15);
  for (double d = 0.0; d <= 0.5; d += 0.01) EXPECT_NEAR(parity_round_map(d), parity_oracle(d), 1e-15);
}

TEST(ParityCorrection, ErrorFreeKeysHalve) {
  Rng rng(8);
  const auto k = noisy_keys(10000, 0.0, 9);
  const auto r = parity_error_correct(k.alice, k.bob, rng, 0.0);
  EXPECT_EQ(r.report.rounds, 1);
  EXPECT_EQ(r.keys.alice.size(), 5000u);
  EXPECT_EQ(r.report.residual_error, 0.0);
  EXPECT_EQ(r.keys.alice, r.keys.bob);
}

TEST(ParityCorrection, OneRoundMap) {
  Rng rng(10);
  const auto k = noisy_keys(100000, 0.25, 11);
  const auto r = parity_error_correct(k.alice, k.bob, rng, 1.0);
  EXPECT_EQ(r.report.rounds, 1);
  EXPECT_NEAR(r.report.residual_error, parity_oracle(0.25), 0.01);
  EXPECT_NEAR(r.report.residual_error, 0.1, band4(0.1, r.keys.alice.size()));
}

TEST(ParityCorrection, ConvergesInTwoRoundsAtOnePercent) {
  Rng rng(12);
  const auto k = noisy_keys(100000, 0.01, 13);
  const auto r = parity_error_correct(k.alice, k.bob, rng, 1e-4);
  EXPECT_LE(r.report.rounds, 2);
  EXPECT_LE(r.report.residual_error, 1e-3);
}

TEST(ParityCorrection, NeverIncreasesError) {
  for (double d : {0.02, 0.1, 0.2, 0.3}) {
    Rng rng(14);
    const auto k = noisy_keys(100000, d, 15);
    const double before = empirical_error_rate(k.alice, k.bob);
    const auto r = parity_error_correct(k.alice, k.bob, rng, 1.0);
    EXPECT_LE(r.report.residual_error, before + band4(before, r.keys.alice.size())) << d;
  }
}

TEST(ParityCorrection, ReportInvariants) {
  Rng rng(16);
  const auto k = noisy_keys(20000, 0.05, 17);
  const auto r = parity_error_correct(k.alice, k.bob, rng, 1e-3, 0.1);
  EXPECT_LE(r.report.final_length, r.report.initial_length);
  EXPECT_GE(r.report.residual_error, 0.0);
  EXPECT_LE(r.report.residual_error, 1.0);
  EXPECT_GT(r.report.disclosed_bits, 0u);
  EXPECT_DOUBLE_EQ(r.report.eve_info_before, 0.1);
  // disclosed parities count as leaked, capped at one bit per bit
  const double leaked = (0.1 * 20000 + double(r.report.disclosed_bits)) / double(r.report.final_length);
  EXPECT_DOUBLE_EQ(r.report.eve_info_after, std::min(1.0, leaked));
}

TEST(ParityCorrection, ExhaustedKeyFails) {
  Rng rng(18);
  const auto k = noisy_keys(64, 0.45, 19);
  try {
    parity_error_correct(k.alice, k.bob, rng, 0.0);
    FAIL() << "expected CorrectionFailed";
  } catch (const CorrectionFailed& e) {
    EXPECT_LT(e.report().final_length, 2u);
    EXPECT_EQ(e.report().initial_length, 64u);
  }
  EXPECT_THROW(parity_error_correct(BitString(1, 0), BitString(1, 0), rng, 0.0), DomainError);
}

TEST(XorAmplification, GuessMap) {
  EXPECT_DOUBLE_EQ(xor_guess_map(0.6), 0.52);
  EXPECT_EQ(xor_guess_map(1.0), 1.0);
  EXPECT_EQ(xor_guess_map(0.5), 0.5);
}

TEST(XorAmplification, FixedPointsOnlyHalfAndOne) {
  for (int i = 1; i < 1000; ++i) {
    const double g = 0.5 + i * 0.0005;
    EXPECT_LT(xor_guess_map(g), g) << g;
    EXPECT_GT(xor_guess_map(g), 0.5);
  }
}

TEST(XorAmplification, LengthHalvesAndRoundsCapped) {
  Rng rng(20);
  const auto k = noisy_keys(1024, 0.0, 21);
  const auto r = privacy_amplify_xor(k.alice, 0.6, 3, rng);
  EXPECT_EQ(r.key.size(), 128u);
  EXPECT_NEAR(r.eve_guess, xor_guess_map(xor_guess_map(0.52)), 1e-15);
  EXPECT_NEAR(r.report.eve_info_before, 1.0 - binary_entropy(0.6), 1e-15);
  EXPECT_LT(r.report.eve_info_after, r.report.eve_info_before);
  EXPECT_NO_THROW(privacy_amplify_xor(k.alice, 0.6, 10, rng));
  EXPECT_THROW(privacy_amplify_xor(k.alice, 0.6, 11, rng), UsageError);
  EXPECT_THROW(privacy_amplify_xor(k.alice, 0.4, 1, rng), DomainError);
}

TEST(XorAmplification, SameSeedKeepsKeysAligned) {
  const auto k = noisy_keys(4096, 0.0, 22);
  Rng ra(99);
  Rng rb(99);
  EXPECT_EQ(privacy_amplify_xor(k.alice, 0.7, 4, ra).key, privacy_amplify_xor(k.bob, 0.7, 4, rb).key);
}

TEST(CsiszarKorner, Examples) {
  EXPECT_EQ(csiszar_korner_rate(1, 0, 0), 1.0);
  EXPECT_NEAR(csiszar_korner_rate(0.9, 0.5, 0.7), 0.4, 1e-15);
  const double d0 = (1.0 - 1.0 / std::sqrt(2.0)) / 2.0;
  const double i = attacks::symmetric_attack_info(d0);
  EXPECT_NEAR(csiszar_korner_rate(mutual_info_bob(d0), i, i), 0.0, 1e-9);
  for (double a : {0.2, 0.7}) {
    for (double e : {0.1, 0.9}) EXPECT_EQ(csiszar_korner_rate(a, e, e), a - e);
  }
}

TEST(AdvantageDistillation, DegenerateBlock) {
  const auto j = attacks::symmetric_joint_distribution(0.2);
  const auto r = advantage_distillation(j, 1);
  EXPECT_NEAR(r.bob_error, 0.2, 1e-12);
  EXPECT_NEAR(r.eve_error, j.eve_error(), 1e-12);
  EXPECT_NEAR(r.acceptance_prob, 1.0, 1e-12);
  EXPECT_THROW(advantage_distillation(j, 2), UsageError);
  EXPECT_THROW(advantage_distillation(j, 0), UsageError);
}

TEST(AdvantageDistillation, BobErrorClosedFormAndMonotone) {
  for (double d : {0.05, 0.2, 0.35, 0.49}) {
    const auto j = attacks::symmetric_joint_distribution(d);
    double prev = 1.0;
    for (int n = 1; n <= 25; n += 2) {
      const auto r = advantage_distillation(j, n);
      const double closed = std::pow(d, n) / (std::pow(d, n) + std::pow(1 - d, n));
      EXPECT_NEAR(r.bob_error, closed, 1e-12 * std::max(1.0, closed));
      EXPECT_LT(r.bob_error, prev + 1e-15);
      prev = r.bob_error;
    }
  }
}

// Eve's symbols are conditionally independent of Bob's given Alice, so on
// accepted blocks her majority vote errs with the binomial tail of her
// single-symbol error. Bob: D^3 / (D^3 + (1-D)^3) = 1/65 at D = 0.2.
TEST(AdvantageDistillation, BlockOfThreeReference) {
  const auto j = attacks::symmetric_joint_distribution(0.2);
  const auto r = advantage_distillation(j, 3);
  EXPECT_NEAR(r.bob_error, 1.0 / 65.0, 1e-12);
  const double e = j.eve_error();
  EXPECT_NEAR(r.eve_error, 3 * e * e * (1 - e) + e * e * e, 1e-12);
  EXPECT_NEAR(r.acceptance_prob, std::pow(0.8, 3) + std::pow(0.2, 3), 1e-12);
}

TEST(AdvantageDistillation, AdvantageRegion) {
  auto advantage = [](double d) {
    const auto j = attacks::symmetric_joint_distribution(d);
    for (int n = 1; n <= 25; n += 2) {
      const auto r = advantage_distillation(j, n);
      if (r.eve_error > r.bob_error) return true;
    }
    return false;
  };
  EXPECT_TRUE(advantage(0.2));
  EXPECT_FALSE(advantage(0.35));
}

TEST(EndToEnd, InterceptResendTenthDistills) {
  protocols::SessionConfig c;
  c.protocol = protocols::ProtocolKind::BB84;
  c.n_pulses = 200000;
  c.source = photonics::FaintPulseSource{1.0, 1e6};
  c.detector = {1.0, 0.0};
  c.attack = attacks::InterceptResend{0.1};
  c.seed = 2024;
  const auto s = protocols::run_session(c);
  auto [a, b] = protocols::sift(s.records);
  Rng rng(1);
  const auto est = estimate_qber(a, b, 0.1, rng);
  EXPECT_NEAR(est.estimate, 0.025, 0.01);
  const auto ec = parity_error_correct(est.remaining.alice, est.remaining.bob, rng, 1e-4, 0.05);
  EXPECT_LE(ec.report.residual_error, 1e-3);
  EXPECT_GT(ec.keys.alice.size(), 1000u);
  const double i_ab = mutual_info_bob(est.estimate);
  EXPECT_GT(csiszar_korner_rate(i_ab, 0.05, 0.05), 0.0);
}
