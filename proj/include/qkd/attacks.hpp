#pragma once

// Eavesdropping strategies: per-pulse transformations for the Monte Carlo
// engines and closed-form predictions of the QBER and Eve's information.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "qkd/infomath.hpp"

namespace qkd::attacks {

struct NoAttack {};

/// Eve measures a `fraction` of the pulses in a random protocol basis and
/// resends the eigenstate she found.
struct InterceptResend {
  Probability fraction = 1.0;
};

/// Like InterceptResend, but measuring in the basis halfway between Z and X.
struct Breidbart {
  Probability fraction = 1.0;
};

/// Optimal symmetric individual attack; `x` is the overlap angle of Eve's
/// probe states, D = (1 - cos x)/2.
struct SymmetricIndividual {
  double x = 0.0;
};

struct Beamsplitter {};

struct PhotonNumberSplitting {};

using AttackStrategy =
    std::variant<NoAttack, InterceptResend, Breidbart, SymmetricIndividual, Beamsplitter, PhotonNumberSplitting>;

void validate(const AttackStrategy& strategy);
std::string name(const AttackStrategy& strategy);

/// Beamsplitter/PNS attacks only work when the channel loses enough photons
/// to hide Eve's blocking.
struct Feasibility {
  double t_link = 1.0;
  double t_threshold = 0.0;
  bool feasible = false;
};

struct AttackPrediction {
  double qber = 0.0;
  double info_ae = 0.0;        // bits per sifted bit
  double eve_agreement = 0.5;  // P(Eve's bit == Alice's bit) on attacked sifted bits
  std::optional<Feasibility> feasibility;
};

/// P(alpha, beta, epsilon) over Alice's bit, Bob's bit and Eve's guess.
class JointDistribution {
 public:
  JointDistribution() = default;
  explicit JointDistribution(const std::array<double, 8>& table);

  double operator()(int alpha, int beta, int eve) const { return table_[index(alpha, beta, eve)]; }

  /// Marginal of two of the three variables (0 = alpha, 1 = beta, 2 = eve).
  std::array<double, 4> pair_marginal(int first, int second) const;
  double mutual_information(int first, int second) const;

  double bob_error() const;
  double eve_error() const;  // P(eve != alpha)

 private:
  static constexpr int index(int a, int b, int e) { return (a << 2) | (b << 1) | e; }
  std::array<double, 8> table_{};
};

AttackPrediction intercept_resend_prediction(Probability fraction);

/// Guess probability cos^2(pi/8) of the Breidbart measurement.
double breidbart_guess_probability();
AttackPrediction breidbart_prediction();

/// Overlap angle x of the symmetric attack producing error rate D.
double symmetric_attack_angle(double qber);

/// Eve's error (1 - sin x)/2 under the symmetric attack at error rate D.
double symmetric_attack_eve_error(double qber);

/// I_max(alpha, epsilon) = 1 - h((1 + sin x)/2) at D = (1 - cos x)/2.
double symmetric_attack_info(double qber);

AttackPrediction symmetric_attack_prediction(double qber);

/// Bob's fidelity F = (1 + cos y)/(2 - cos x + cos y).
double fidelity_from_overlaps(double x, double y);

JointDistribution symmetric_joint_distribution(double qber);

struct EveRecord {
  bool attacked = false;
  std::optional<int> bit;
  std::optional<MeasurementBasis> basis;
};

struct AttackOutcome {
  std::optional<Bloch> forwarded;
  EveRecord eve;
};

/// Applies a per-pulse samplable strategy (None, InterceptResend, Breidbart).
/// `eve_bases` are the bases Eve picks from for intercept-resend.
AttackOutcome apply_attack(const Bloch& state, const AttackStrategy& strategy,
                           std::span<const MeasurementBasis> eve_bases, Rng& rng);

/// Eve's fraction 3/8 of resent multi-photon pulses.
inline constexpr double kBeamsplitterResendFraction = 3.0 / 8.0;

AttackPrediction beamsplitter_prediction(double mu, double t_link);

/// Fraction of Bob's detections Eve can supply with the beamsplitter attack
/// under the small-mu Poisson form t <= 3 mu / 16.
double beamsplitter_exploitable_fraction(double mu, double t_link);

/// Mean photon number at which the beamsplitter attack gives Eve the same
/// average information as intercept-resend at equal QBER on attacked pulses.
double beamsplitter_matched_mu(double t_link);

/// P(Bob detects | pulse non-empty) under Poisson statistics.
double detection_given_nonempty(double mu, double t_link, double eta);

/// True iff the multi-photon fraction exceeds Bob's detection probability of
/// non-empty pulses, letting Eve block all single-photon pulses unnoticed.
bool pns_full_info_condition(double mu, double t_link, double eta);

/// QBER of intercept-resend on every pulse with `n_bases` mutually unbiased
/// bases: 1/4 for two bases, 1/3 for three.
double full_measure_qber(int n_bases);
double six_state_full_measure_qber();

/// Optimal universal cloning fidelity 5/6.
double optimal_cloning_fidelity();

}  // namespace qkd::attacks
