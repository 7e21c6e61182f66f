#include "qkd/protocols.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string_view>

namespace qkd::protocols {

namespace {

using attacks::AttackStrategy;
using photonics::Detector;

struct Click {
  BasisTag basis;
  int bit;
  bool dark;
};

struct Detection {
  bool detected = false;
  BasisTag basis = BasisTag::Z;
  int bit = -1;
  bool dark = false;
};

int binomial(Rng& rng, int n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  return std::binomial_distribution<int>(n, p)(rng);
}

BasisTag pick(const std::vector<BasisTag>& set, Rng& rng) {
  return set[std::uniform_int_distribution<std::size_t>(0, set.size() - 1)(rng)];
}

/// Bob's detector bank. With two detectors only the chosen basis is
/// monitored; with 2 * |bases| detectors (passive choice) every detector
/// can fire a dark count. Double clicks resolve to a random bit.
Detection detect(const std::vector<BasisTag>& bob_bases, BasisTag chosen, int k0, int k1, const Detector& det,
                 int n_det, Rng& rng) {
  std::vector<Click> clicks;
  const bool passive = n_det == static_cast<int>(2 * bob_bases.size()) && n_det != 2;
  for (BasisTag b : bob_bases) {
    if (!passive && b != chosen) continue;
    for (int bit = 0; bit < 2; ++bit) {
      const int photons = (b == chosen) ? (bit == 0 ? k0 : k1) : 0;
      // a dark count coinciding with a lost photon still counts as dark
      const bool photon = photons > 0 && bernoulli(rng, photonics::click_probability(photons, {det.eta, 0.0}));
      const bool dark = bernoulli(rng, det.p_dark);
      if (photon || dark) clicks.push_back({b, bit, !photon});
    }
  }
  if (clicks.empty()) return {};
  const bool one_basis =
      std::all_of(clicks.begin(), clicks.end(), [&](const Click& c) { return c.basis == clicks.front().basis; });
  const bool all_dark = std::all_of(clicks.begin(), clicks.end(), [](const Click& c) { return c.dark; });
  if (clicks.size() == 1) return {true, clicks[0].basis, clicks[0].bit, all_dark};
  if (one_basis) return {true, clicks.front().basis, random_bit(rng), all_dark};
  const auto& c = clicks[std::uniform_int_distribution<std::size_t>(0, clicks.size() - 1)(rng)];
  return {true, c.basis, c.bit, all_dark};
}

/// Splits `photons` photons in `state` between the two outputs of `basis`.
std::pair<int, int> split_outputs(const Bloch& state, BasisTag basis, int photons, double visibility, Rng& rng) {
  const double p0 = outcome_probability(Bloch(visibility * state), to_basis(basis).axis);
  const int k0 = binomial(rng, photons, p0);
  return {k0, photons - k0};
}

void tally(SessionResult& res, const PulseRecord& rec, bool keep) {
  if (rec.detected) {
    ++res.raw_count;
    if (rec.bob_bit != rec.alice_bit) ++res.raw_error_count;
    if (rec.sifted()) {
      ++res.sifted_count;
      if (rec.bob_bit != rec.alice_bit) ++res.error_count;
      if (rec.eve_bit >= 0) {
        ++res.eve_guessed_sifted;
        if (rec.eve_bit == rec.alice_bit) ++res.eve_correct_sifted;
      }
    }
  }
  if (keep) res.records.push_back(rec);
}

void finish(SessionResult& res) {
  res.qber_estimate = res.sifted_count ? double(res.error_count) / double(res.sifted_count) : 0.0;
}

void check_detector_count(int n_det, std::size_t n_bases) {
  if (n_det != 2 && n_det != static_cast<int>(2 * n_bases)) {
    throw ConfigError("n_det", "Monte Carlo sessions support 2 detectors (active choice) or " +
                                   std::to_string(2 * n_bases) + " (passive choice)");
  }
}

/// Per-pulse Eve action for strategies that transform the qubit classically.
struct EveAction {
  std::optional<Bloch> state;
  std::int8_t eve_bit = -1;
};

EveAction eve_on_qubit(const Bloch& state, int alice_bit, const AttackStrategy& attack,
                       const std::vector<MeasurementBasis>& eve_bases, Rng& rng) {
  if (const auto* sym = std::get_if<attacks::SymmetricIndividual>(&attack)) {
    const double eve_correct = (1.0 + std::sin(sym->x)) / 2.0;
    const int guess = bernoulli(rng, eve_correct) ? alice_bit : 1 - alice_bit;
    return {shrink(state, std::cos(sym->x)), static_cast<std::int8_t>(guess)};
  }
  auto out = attacks::apply_attack(state, attack, eve_bases, rng);
  return {out.forwarded, static_cast<std::int8_t>(out.eve.bit.value_or(-1))};
}

std::vector<MeasurementBasis> to_bases(const std::vector<BasisTag>& tags) {
  std::vector<MeasurementBasis> out;
  for (BasisTag t : tags) out.push_back(to_basis(t));
  return out;
}

SessionResult run_prepare_measure(const SessionConfig& cfg) {
  const auto& src = std::get<photonics::FaintPulseSource>(cfg.source);
  const BasisSets sets = basis_sets(cfg.protocol);
  const auto eve_bases = to_bases(sets.alice);
  const double t = photonics::fiber_transmission(cfg.channel) * cfg.q;
  const double visibility = 1.0 - 2.0 * cfg.p_opt;
  Rng rng(cfg.seed);

  SessionResult res;
  res.n_pulses = cfg.n_pulses;
  if (cfg.keep_records) res.records.reserve(cfg.n_pulses);

  for (std::size_t i = 0; i < cfg.n_pulses; ++i) {
    PulseRecord rec;
    rec.alice_bit = static_cast<std::uint8_t>(random_bit(rng));
    rec.alice_basis = pick(sets.alice, rng);
    rec.bob_basis = pick(sets.bob, rng);
    const Bloch state = to_basis(rec.alice_basis).eigenstate(rec.alice_bit);
    const int photons = photonics::poisson_photon_number(src.mu, rng);
    rec.multiphoton = photons >= 2;

    // photons reaching Bob's analyzer and the state they carry
    int arriving = 0;
    Bloch carried = state;
    if (photons > 0) {
      if (std::holds_alternative<attacks::Beamsplitter>(cfg.attack)) {
        // Eve blocks everything; two photons routed to the same analyzer
        // and found in the same output trigger a lossless resend
        if (photons >= 2) {
          const BasisTag first = pick(sets.alice, rng);
          const BasisTag second = pick(sets.alice, rng);
          if (first == second) {
            const auto basis = to_basis(first);
            const int a = measure(state, basis, rng);
            const int b = measure(state, basis, rng);
            if (a == b) {
              carried = basis.eigenstate(a);
              rec.eve_bit = static_cast<std::int8_t>(a);
              arriving = binomial(rng, 1, cfg.q);
            }
          }
        }
      } else if (std::holds_alternative<attacks::PhotonNumberSplitting>(cfg.attack)) {
        // single photons are blocked; Eve keeps one photon of the rest and
        // reads it after basis reconciliation
        if (photons >= 2) {
          rec.eve_bit = static_cast<std::int8_t>(rec.alice_bit);
          arriving = binomial(rng, photons - 1, cfg.q);
        }
      } else {
        const EveAction eve = eve_on_qubit(state, rec.alice_bit, cfg.attack, eve_bases, rng);
        carried = *eve.state;
        rec.eve_bit = eve.eve_bit;
        arriving = binomial(rng, photons, t);
      }
    }

    const auto [k0, k1] = split_outputs(carried, rec.bob_basis, arriving, visibility, rng);
    const Detection d = detect(sets.bob, rec.bob_basis, k0, k1, cfg.detector, cfg.n_det, rng);
    if (d.detected) {
      rec.detected = true;
      rec.bob_basis = d.basis;
      rec.bob_bit = static_cast<std::int8_t>(d.bit);
      rec.dark_count_origin = d.dark;
    }
    tally(res, rec, cfg.keep_records);
  }
  finish(res);
  return res;
}

}  // namespace

const char* to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::BB84: return "bb84";
    case ProtocolKind::B92: return "b92";
    case ProtocolKind::SixState: return "six_state";
    case ProtocolKind::EPR_BB84: return "epr_bb84";
    case ProtocolKind::Ekert3Basis: return "ekert";
  }
  return "?";
}

std::optional<ProtocolKind> parse_protocol(std::string_view text) {
  for (auto k : {ProtocolKind::BB84, ProtocolKind::B92, ProtocolKind::SixState, ProtocolKind::EPR_BB84,
                 ProtocolKind::Ekert3Basis}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

MeasurementBasis to_basis(BasisTag tag) {
  switch (tag) {
    case BasisTag::Z: return MeasurementBasis::z();
    case BasisTag::X: return MeasurementBasis::x();
    case BasisTag::Y: return MeasurementBasis::y();
    case BasisTag::D45: return MeasurementBasis::custom(M_PI / 4);
    case BasisTag::D135: return MeasurementBasis::custom(3 * M_PI / 4);
    case BasisTag::B92: break;
  }
  throw UsageError("to_basis: B92 tag has no measurement basis");
}

BasisSets basis_sets(ProtocolKind kind) {
  using enum BasisTag;
  switch (kind) {
    case ProtocolKind::BB84:
    case ProtocolKind::EPR_BB84: return {{Z, X}, {Z, X}};
    case ProtocolKind::SixState: return {{Z, X, Y}, {Z, X, Y}};
    case ProtocolKind::Ekert3Basis: return {{Z, D45, X}, {D45, X, D135}};
    case ProtocolKind::B92: return {{B92}, {B92}};
  }
  return {};
}

void SessionConfig::validate() const {
  if (n_pulses == 0) throw ConfigError("n_pulses", "must be > 0");
  if (q != 1.0 && q != 0.5) throw ConfigError("q", "must be 1 or 0.5");
  if (n_det < 1) throw ConfigError("n_det", "must be >= 1");
  channel.validate();
  detector.validate();
  attacks::validate(attack);
  const bool pair = protocol == ProtocolKind::EPR_BB84 || protocol == ProtocolKind::Ekert3Basis;
  if (pair) {
    const auto* ps = std::get_if<photonics::PairSource>(&source);
    if (!ps) throw ConfigError("source", "entanglement-based protocols need a pair source");
    ps->validate();
    if (std::holds_alternative<attacks::Beamsplitter>(attack) ||
        std::holds_alternative<attacks::PhotonNumberSplitting>(attack)) {
      throw ConfigError("attack", "multi-photon attacks apply to faint-pulse sources only");
    }
  } else {
    const auto* fp = std::get_if<photonics::FaintPulseSource>(&source);
    if (!fp) throw ConfigError("source", "prepare-and-measure protocols need a faint-pulse source");
    fp->validate();
  }
  if (protocol == ProtocolKind::B92) {
    if (!(b92_angle >= 0.0 && b92_angle <= M_PI / 2)) throw ConfigError("b92_angle", "must lie in [0, pi/2]");
    if (std::holds_alternative<attacks::Beamsplitter>(attack) ||
        std::holds_alternative<attacks::PhotonNumberSplitting>(attack)) {
      throw ConfigError("attack", "multi-photon attacks are modeled for BB84-family bases only");
    }
  } else {
    check_detector_count(n_det, basis_sets(protocol).bob.size());
  }
}

SessionResult run_session(const SessionConfig& cfg) {
  cfg.validate();
  switch (cfg.protocol) {
    case ProtocolKind::B92: return run_b92_session(cfg);
    case ProtocolKind::EPR_BB84:
    case ProtocolKind::Ekert3Basis: return run_epr_session(cfg);
    case ProtocolKind::BB84:
    case ProtocolKind::SixState: return run_prepare_measure(cfg);
  }
  throw UsageError("run_session: unknown protocol");
}

SessionResult run_b92_session(const SessionConfig& cfg) {
  if (cfg.protocol != ProtocolKind::B92) throw ConfigError("protocol", "run_b92_session needs protocol = b92");
  cfg.validate();
  const auto& src = std::get<photonics::FaintPulseSource>(cfg.source);
  // polarization angle theta becomes 2 theta on the sphere
  const std::array<Bloch, 2> states{MeasurementBasis::z().axis,
                                    MeasurementBasis::custom(2.0 * cfg.b92_angle).axis};
  const std::vector<MeasurementBasis> eve_bases{MeasurementBasis::z(), MeasurementBasis::x()};
  const double t = photonics::fiber_transmission(cfg.channel) * cfg.q;
  const double visibility = 1.0 - 2.0 * cfg.p_opt;
  Rng rng(cfg.seed);

  SessionResult res;
  res.n_pulses = cfg.n_pulses;
  if (cfg.keep_records) res.records.reserve(cfg.n_pulses);

  for (std::size_t i = 0; i < cfg.n_pulses; ++i) {
    PulseRecord rec;
    rec.alice_bit = static_cast<std::uint8_t>(random_bit(rng));
    rec.alice_basis = BasisTag::B92;
    rec.bob_basis = BasisTag::B92;
    const int test = random_bit(rng);  // Bob excludes state `test`
    const int photons = photonics::poisson_photon_number(src.mu, rng);
    rec.multiphoton = photons >= 2;

    int arriving = 0;
    Bloch carried = states[rec.alice_bit];
    if (photons > 0) {
      const EveAction eve = eve_on_qubit(carried, rec.alice_bit, cfg.attack, eve_bases, rng);
      carried = *eve.state;
      rec.eve_bit = eve.eve_bit;
      arriving = binomial(rng, photons, t);
    }
    // the monitored output is the state orthogonal to the excluded one
    const double pass = outcome_probability(Bloch(visibility * carried), Bloch(-states[test]));
    const int passed = binomial(rng, arriving, pass);
    const bool photon = passed > 0 && bernoulli(rng, photonics::click_probability(passed, {cfg.detector.eta, 0.0}));
    const bool dark = bernoulli(rng, cfg.detector.p_dark);
    if (photon || dark) {
      rec.detected = true;
      rec.bob_bit = static_cast<std::int8_t>(1 - test);
      rec.dark_count_origin = !photon;
    }
    tally(res, rec, cfg.keep_records);
  }
  finish(res);
  return res;
}

SessionResult run_epr_session(const SessionConfig& cfg) {
  if (cfg.protocol != ProtocolKind::EPR_BB84 && cfg.protocol != ProtocolKind::Ekert3Basis) {
    throw ConfigError("protocol", "run_epr_session needs an entanglement-based protocol");
  }
  cfg.validate();
  const auto& src = std::get<photonics::PairSource>(cfg.source);
  const BasisSets sets = basis_sets(cfg.protocol);
  const std::vector<MeasurementBasis> eve_bases{MeasurementBasis::z(), MeasurementBasis::x()};
  const double t = photonics::fiber_transmission(cfg.channel) * cfg.q;
  const double visibility = 1.0 - 2.0 * cfg.p_opt;
  Rng rng(cfg.seed);

  SessionResult res;
  res.n_pulses = cfg.n_pulses;
  if (cfg.keep_records) res.records.reserve(cfg.n_pulses);

  for (std::size_t i = 0; i < cfg.n_pulses; ++i) {
    PulseRecord rec;
    rec.alice_basis = pick(sets.alice, rng);
    rec.bob_basis = pick(sets.bob, rng);
    // Alice's outcome on phi+ is uniform and steers Bob's photon to the
    // same eigenstate for real bases on the Z-X circle
    rec.alice_bit = static_cast<std::uint8_t>(random_bit(rng));
    Bloch bob_state = to_basis(rec.alice_basis).eigenstate(rec.alice_bit);
    bool present = false;
    if (bernoulli(rng, src.p_acc)) {
      rec.accidental_pair = true;
      present = true;
      bob_state = eve_bases[random_bit(rng)].eigenstate(random_bit(rng));
    } else {
      present = bernoulli(rng, src.mu_eff);
    }

    int arriving = 0;
    if (present) {
      const EveAction eve = eve_on_qubit(bob_state, rec.alice_bit, cfg.attack, eve_bases, rng);
      bob_state = *eve.state;
      rec.eve_bit = eve.eve_bit;
      arriving = binomial(rng, 1, t);
    }
    const auto [k0, k1] = split_outputs(bob_state, rec.bob_basis, arriving, visibility, rng);
    const Detection d = detect(sets.bob, rec.bob_basis, k0, k1, cfg.detector, cfg.n_det, rng);
    if (d.detected) {
      rec.detected = true;
      rec.bob_basis = d.basis;
      rec.bob_bit = static_cast<std::int8_t>(d.bit);
      rec.dark_count_origin = d.dark;
    }
    tally(res, rec, cfg.keep_records);
  }
  finish(res);
  return res;
}

std::pair<BitString, BitString> sift(const std::vector<PulseRecord>& records) {
  BitString alice;
  BitString bob;
  for (const auto& r : records) {
    if (!r.sifted()) continue;
    alice.push_back(r.alice_bit);
    bob.push_back(static_cast<std::uint8_t>(r.bob_bit));
  }
  return {std::move(alice), std::move(bob)};
}

std::optional<double> basis_match_prob(ProtocolKind kind) {
  if (kind == ProtocolKind::B92) return std::nullopt;
  const BasisSets sets = basis_sets(kind);
  std::size_t matches = 0;
  for (BasisTag a : sets.alice)
    for (BasisTag b : sets.bob)
      if (a == b) ++matches;
  return double(matches) / double(sets.alice.size() * sets.bob.size());
}

PhaseOutcome phase_to_outcome(double phi_alice, double phi_bob) {
  auto quarter = [](double phi) -> std::optional<int> {
    const double k = phi / (M_PI / 2);
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-9) return std::nullopt;
    return static_cast<int>(r);
  };
  const auto a = quarter(phi_alice);
  const auto b = quarter(phi_bob);
  if (!a || *a < 0 || *a > 3) throw DomainError("phase_to_outcome: Alice phase must be 0, pi/2, pi or 3pi/2");
  if (!b || *b < 0 || *b > 1) throw DomainError("phase_to_outcome: Bob phase must be 0 or pi/2");
  const int diff = ((*a - *b) % 4 + 4) % 4;
  if (diff == 0) return {true, 0};
  if (diff == 2) return {true, 1};
  return {false, std::nullopt};
}

}  // namespace qkd::protocols
