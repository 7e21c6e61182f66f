#include "qkd/attacks.hpp"

#include <cmath>
#include <numeric>

#include "qkd/photonics.hpp"

namespace qkd::attacks {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require_qber(double qber, const char* where) {
  if (!(qber >= 0.0 && qber <= 0.5)) throw DomainError(std::string(where) + ": error rate outside [0,0.5]");
}

}  // namespace

void validate(const AttackStrategy& strategy) {
  if (const auto* s = std::get_if<SymmetricIndividual>(&strategy)) {
    if (!(s->x >= 0.0 && s->x <= M_PI / 2)) throw ConfigError("x", "probe overlap angle must lie in [0, pi/2]");
  }
}

std::string name(const AttackStrategy& strategy) {
  return std::visit(Overloaded{
                        [](const NoAttack&) { return std::string("none"); },
                        [](const InterceptResend&) { return std::string("intercept_resend"); },
                        [](const Breidbart&) { return std::string("breidbart"); },
                        [](const SymmetricIndividual&) { return std::string("symmetric"); },
                        [](const Beamsplitter&) { return std::string("beamsplitter"); },
                        [](const PhotonNumberSplitting&) { return std::string("pns"); },
                    },
                    strategy);
}

JointDistribution::JointDistribution(const std::array<double, 8>& table) : table_(table) {
  double sum = 0.0;
  for (double p : table_) {
    if (!(p >= 0.0)) throw DomainError("joint distribution entry is negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("joint distribution does not sum to 1");
}

std::array<double, 4> JointDistribution::pair_marginal(int first, int second) const {
  std::array<double, 4> m{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int e = 0; e < 2; ++e) {
        const std::array<int, 3> v{a, b, e};
        m[(v[first] << 1) | v[second]] += (*this)(a, b, e);
      }
  return m;
}

double JointDistribution::mutual_information(int first, int second) const {
  const auto joint = pair_marginal(first, second);
  const std::array<double, 2> px{joint[0] + joint[1], joint[2] + joint[3]};
  const std::array<double, 2> py{joint[0] + joint[2], joint[1] + joint[3]};
  double info = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double p = joint[(i << 1) | j];
      if (p > 0.0) info += p * std::log2(p / (px[i] * py[j]));
    }
  return info;
}

double JointDistribution::bob_error() const {
  const auto m = pair_marginal(0, 1);
  return m[1] + m[2];
}

double JointDistribution::eve_error() const {
  const auto m = pair_marginal(0, 2);
  return m[1] + m[2];
}

AttackPrediction intercept_resend_prediction(Probability fraction) {
  return {0.25 * fraction, 0.5 * fraction, 0.75, std::nullopt};
}

double breidbart_guess_probability() {
  const double c = std::cos(M_PI / 8);
  return c * c;
}

AttackPrediction breidbart_prediction() {
  const double p = breidbart_guess_probability();
  return {2.0 * p * (1.0 - p), 1.0 - binary_entropy(p), p, std::nullopt};
}

double symmetric_attack_angle(double qber) {
  require_qber(qber, "symmetric_attack_angle");
  return std::acos(1.0 - 2.0 * qber);
}

double symmetric_attack_eve_error(double qber) {
  return (1.0 - std::sin(symmetric_attack_angle(qber))) / 2.0;
}

double symmetric_attack_info(double qber) {
  return 1.0 - binary_entropy(1.0 - symmetric_attack_eve_error(qber));
}

AttackPrediction symmetric_attack_prediction(double qber) {
  const double eve_error = symmetric_attack_eve_error(qber);
  return {qber, 1.0 - binary_entropy(eve_error), 1.0 - eve_error, std::nullopt};
}

double fidelity_from_overlaps(double x, double y) {
  if (!(x >= 0.0 && x <= M_PI && y >= 0.0 && y <= M_PI)) {
    throw DomainError("fidelity_from_overlaps: angles outside [0, pi]");
  }
  const double den = 2.0 - std::cos(x) + std::cos(y);
  // x = 0, y = pi leaves F undetermined
  if (den <= tol::algebraic) throw DomainError("fidelity_from_overlaps: degenerate probe overlaps");
  return (1.0 + std::cos(y)) / den;
}

JointDistribution symmetric_joint_distribution(double qber) {
  const double eve_error = symmetric_attack_eve_error(qber);
  std::array<double, 8> table{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int e = 0; e < 2; ++e) {
        const double pb = (a == b) ? 1.0 - qber : qber;
        const double pe = (a == e) ? 1.0 - eve_error : eve_error;
        table[(a << 2) | (b << 1) | e] = 0.5 * pb * pe;
      }
  return JointDistribution(table);
}

AttackOutcome apply_attack(const Bloch& state, const AttackStrategy& strategy,
                           std::span<const MeasurementBasis> eve_bases, Rng& rng) {
  auto resend_in = [&](const MeasurementBasis& basis) {
    const int bit = measure(state, basis, rng);
    return AttackOutcome{basis.eigenstate(bit), EveRecord{true, bit, basis}};
  };
  return std::visit(
      Overloaded{
          [&](const NoAttack&) { return AttackOutcome{state, {}}; },
          [&](const InterceptResend& ir) {
            if (eve_bases.empty()) throw UsageError("apply_attack: intercept-resend needs at least one basis");
            if (!bernoulli(rng, ir.fraction)) return AttackOutcome{state, {}};
            const auto pick = std::uniform_int_distribution<std::size_t>(0, eve_bases.size() - 1)(rng);
            return resend_in(eve_bases[pick]);
          },
          [&](const Breidbart& b) {
            if (!bernoulli(rng, b.fraction)) return AttackOutcome{state, {}};
            return resend_in(MeasurementBasis::custom(M_PI / 4));
          },
          [](const auto&) -> AttackOutcome {
            throw UsageError("apply_attack: strategy is not samplable per pulse");
          },
      },
      strategy);
}

AttackPrediction beamsplitter_prediction(double mu, double t_link) {
  if (!(mu > 0.0)) throw DomainError("beamsplitter_prediction: mu must be > 0");
  if (!(t_link > 0.0 && t_link <= 1.0)) throw DomainError("beamsplitter_prediction: t_link outside (0,1]");
  const double threshold = kBeamsplitterResendFraction * photonics::multiphoton_prob(mu);
  // on resent pulses Eve chose the right basis 2/3 of the time; otherwise Bob
  // sees a random bit and Eve learns nothing
  return {1.0 / 6.0, 2.0 / 3.0, 5.0 / 6.0, Feasibility{t_link, threshold, t_link <= threshold}};
}

double beamsplitter_exploitable_fraction(double mu, double t_link) {
  if (!(mu > 0.0)) throw DomainError("beamsplitter_exploitable_fraction: mu must be > 0");
  if (!(t_link > 0.0 && t_link <= 1.0)) throw DomainError("beamsplitter_exploitable_fraction: t_link outside (0,1]");
  return std::min(1.0, 3.0 * mu / 16.0 / t_link);
}

double beamsplitter_matched_mu(double t_link) {
  if (!(t_link > 0.0 && t_link <= 1.0)) throw DomainError("beamsplitter_matched_mu: t_link outside (0,1]");
  // at equal QBER the attack yields twice the intercept-resend information,
  // so the mean gains agree once Eve can supply only half of Bob's detections
  constexpr double matched_fraction = 0.5;
  return matched_fraction * 16.0 * t_link / 3.0;
}

double detection_given_nonempty(double mu, double t_link, double eta) {
  if (!(mu > 0.0)) throw DomainError("detection_given_nonempty: mu must be > 0");
  return -std::expm1(-mu * t_link * eta) / -std::expm1(-mu);
}

bool pns_full_info_condition(double mu, double t_link, double eta) {
  if (!(t_link >= 0.0 && t_link <= 1.0 && eta >= 0.0 && eta <= 1.0)) {
    throw DomainError("pns_full_info_condition: probabilities outside [0,1]");
  }
  return photonics::multiphoton_prob(mu) > detection_given_nonempty(mu, t_link, eta);
}

double full_measure_qber(int n_bases) {
  if (n_bases < 1) throw DomainError("full_measure_qber: need at least one basis");
  // wrong basis with probability 1 - 1/n, then a coin flip
  return 0.5 * (1.0 - 1.0 / n_bases);
}

double six_state_full_measure_qber() { return full_measure_qber(3); }

double optimal_cloning_fidelity() { return (2.0 + 0.5) / 3.0; }

}  // namespace qkd::attacks
