#include "qkd/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "qkd/analytics.hpp"
#include "qkd/cli/config.hpp"
#include "qkd/cli/csv.hpp"
#include "qkd/distill.hpp"
#include "qkd/protocols.hpp"

namespace qkd::cli {

namespace {

class ComparisonFailed : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

ExperimentConfig load(const CommandOptions& opts) {
  if (!opts.config) throw ConfigError("--config", "this command needs a config file");
  ExperimentConfig cfg = load_config(*opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.pulses) {
    if (*opts.pulses == 0) throw ConfigError("--pulses", "must be > 0");
    cfg.n_pulses = *opts.pulses;
  }
  return cfg;
}

/// Runs body(i) for i in [0, n) on up to `threads` workers; every index is
/// written by exactly one worker so the result does not depend on timing.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += threads) body(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<double> grid(double lo, double hi, double step) {
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + double(i) * step;
  return out;
}

void set_variable(analytics::SystemParams& p, const std::string& name, double v) {
  if (name == "length") p.length = v;
  else if (name == "mu") p.mu = v;
  else if (name == "eta") p.eta = v;
  else if (name == "p_dark") p.p_dark = v;
  else if (name == "alpha") p.alpha = v;
  else if (name == "p_opt") {
    p.visibility.reset();
    p.p_opt = v;
  } else {
    throw ConfigError("sweep.variable", "cannot sweep '" + name + "'");
  }
}

struct Pipeline {
  protocols::SessionResult session;
  attacks::AttackPrediction prediction;
  double measured_qber = 0.0;
  std::optional<distill::QberEstimate> estimate;
  std::optional<distill::CorrectionResult> corrected;
  std::string correction_failure;
  std::optional<distill::AmplificationResult> amplified;
  double eve_guess = 0.5;
  std::size_t final_length = 0;
  double residual_error = 0.0;
  double i_ab = 0.0;
  double ck_rate = 0.0;
};

Pipeline run_pipeline(const ExperimentConfig& cfg) {
  Pipeline p;
  p.session = protocols::run_session(to_session(cfg));
  p.prediction = predicted_attack(cfg);
  p.measured_qber = p.session.qber_estimate;
  p.i_ab = mutual_info_bob(std::min(p.measured_qber, 0.5));
  p.ck_rate = distill::csiszar_korner_rate(p.i_ab, p.prediction.info_ae, p.prediction.info_ae);

  const DistillSection ds = cfg.distill.value_or(DistillSection{});
  auto [alice, bob] = protocols::sift(p.session.records);
  if (alice.size() < 2) return p;

  Rng rng = derive_stream(cfg.seed, 1);
  p.estimate = distill::estimate_qber(alice, bob, ds.sample_fraction, rng);
  const auto& rem = p.estimate->remaining;
  if (rem.alice.size() < 2) return p;
  if (p.estimate->estimate <= ds.target_error) {
    distill::DistillationReport skipped;
    skipped.initial_length = skipped.final_length = rem.alice.size();
    skipped.eve_info_before = skipped.eve_info_after = p.prediction.info_ae;
    p.corrected = distill::CorrectionResult{rem, skipped};
  } else {
    try {
      p.corrected = distill::parity_error_correct(rem.alice, rem.bob, rng, ds.target_error, p.prediction.info_ae);
    } catch (const distill::CorrectionFailed& e) {
      p.correction_failure = e.what();
      return p;
    }
  }

  // Eve holds a guess on the attacked share of the sifted bits only
  const double attacked = p.session.sifted_count
                              ? double(p.session.eve_guessed_sifted) / double(p.session.sifted_count)
                              : 0.0;
  p.eve_guess = std::clamp(attacked * p.prediction.eve_agreement + (1.0 - attacked) * 0.5, 0.5, 1.0);

  const auto& keys = p.corrected->keys;
  const int max_rounds = keys.alice.empty() ? 0 : static_cast<int>(std::floor(std::log2(double(keys.alice.size()))));
  const int rounds = std::min(ds.pa_rounds, max_rounds);
  Rng pa_alice = derive_stream(cfg.seed, 2);
  Rng pa_bob = pa_alice;
  p.amplified = distill::privacy_amplify_xor(keys.alice, p.eve_guess, rounds, pa_alice);
  const auto bob_key = distill::privacy_amplify_xor(keys.bob, p.eve_guess, rounds, pa_bob);
  p.final_length = p.amplified->key.size();
  p.residual_error = distill::empirical_error_rate(p.amplified->key, bob_key.key);
  return p;
}

double z_score(double empirical, double expected, std::size_t n) {
  if (n == 0) return 0.0;
  const double sigma = std::sqrt(expected * (1.0 - expected) / double(n));
  if (sigma == 0.0) return empirical == expected ? 0.0 : std::copysign(INFINITY, empirical - expected);
  return (empirical - expected) / sigma;
}

struct Expectation {
  double sift_rate = 0.0;  // sifted detections per pulse
  double qber = 0.0;
  std::optional<double> eve_agreement;
};

/// Per-pulse expectation for the prepare-and-measure engine: Poisson photon
/// number, per-photon survival t q eta, dark clicks only on otherwise empty
/// slots, attack and optical errors composed as two binary channels.
Expectation session_expectation(const ExperimentConfig& cfg) {
  using protocols::ProtocolKind;
  if (cfg.protocol != ProtocolKind::BB84 && cfg.protocol != ProtocolKind::SixState) {
    throw ConfigError("protocol.kind", "compare supports bb84 and six_state");
  }
  const bool supported = std::holds_alternative<attacks::NoAttack>(cfg.attack) ||
                         std::holds_alternative<attacks::InterceptResend>(cfg.attack) ||
                         std::holds_alternative<attacks::Breidbart>(cfg.attack) ||
                         std::holds_alternative<attacks::SymmetricIndividual>(cfg.attack);
  if (!supported) throw ConfigError("attack.strategy", "compare supports none, intercept_resend, breidbart, symmetric");

  const auto& p = cfg.system;
  const double match = *protocols::basis_match_prob(cfg.protocol);
  const double t = photonics::fiber_transmission({p.alpha, p.length}) * p.q;
  const double empty = std::exp(-p.mu * t * p.eta);
  const double photon = match * (1.0 - empty);
  const double dark = match * empty * (1.0 - std::pow(1.0 - p.p_dark, p.detectors()));

  const auto pred = predicted_attack(cfg);
  const double opt = p.optical_error();
  const double signal_error = pred.qber * (1.0 - opt) + (1.0 - pred.qber) * opt;

  Expectation e;
  e.sift_rate = photon + dark;
  e.qber = e.sift_rate > 0.0 ? (photon * signal_error + 0.5 * dark) / e.sift_rate : 0.0;
  if (!std::holds_alternative<attacks::NoAttack>(cfg.attack)) e.eve_agreement = pred.eve_agreement;
  return e;
}

}  // namespace

int cmd_simulate(const CommandOptions& opts, std::ostream& out) {
  const ExperimentConfig cfg = load(opts);
  const Pipeline p = run_pipeline(cfg);
  const auto& s = p.session;

  out << fmt::format("protocol: {}  attack: {}  pulses: {}  seed: {}\n", protocols::to_string(cfg.protocol),
                     attacks::name(cfg.attack), s.n_pulses, cfg.seed);
  out << fmt::format("raw detections: {}\n", s.raw_count);
  out << fmt::format("sifted: {}  (sift ratio {:.4f})\n", s.sifted_count, s.sift_ratio());
  out << fmt::format("measured qber: {:.6f}  predicted attack qber: {:.6f}\n", p.measured_qber, p.prediction.qber);
  if (s.eve_guessed_sifted > 0) {
    out << fmt::format("eve agreement: {:.6f}  predicted: {:.6f}  (on {} sifted bits)\n", s.eve_agreement(),
                       p.prediction.eve_agreement, s.eve_guessed_sifted);
  }
  out << fmt::format("predicted eve information per bit: {:.6f}\n", p.prediction.info_ae);
  if (p.estimate) {
    out << fmt::format("qber estimate from {} disclosed bits: {:.6f}\n", p.estimate->sample_size, p.estimate->estimate);
  }
  if (p.corrected) {
    const auto& r = p.corrected->report;
    out << fmt::format("error correction: {} rounds, {} -> {} bits, residual error {:.6g}, {} parities disclosed\n",
                       r.rounds, r.initial_length, r.final_length, r.residual_error, r.disclosed_bits);
  } else if (!p.correction_failure.empty()) {
    out << fmt::format("error correction failed: {}\n", p.correction_failure);
  }
  if (p.amplified) {
    const auto& r = p.amplified->report;
    out << fmt::format("privacy amplification: {} rounds, eve guess {:.6f} -> {:.6f}\n", r.rounds, p.eve_guess,
                       p.amplified->eve_guess);
  }
  out << fmt::format("distilled key length: {}  residual error: {:.6g}\n", p.final_length, p.residual_error);
  out << fmt::format("csiszar-korner rate: {:.6f}\n", p.ck_rate);

  if (opts.out) {
    CsvCurve csv;
    csv.columns = {"n_pulses", "raw", "sifted", "errors", "qber", "predicted_qber", "eve_agreement",
                   "predicted_eve_agreement", "final_length", "residual_error", "ck_rate"};
    csv.add_row({double(s.n_pulses), double(s.raw_count), double(s.sifted_count), double(s.error_count),
                 p.measured_qber, p.prediction.qber, s.eve_agreement(), p.prediction.eve_agreement,
                 double(p.final_length), p.residual_error, p.ck_rate});
    write_csv(*opts.out, csv);
  }
  return kOk;
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out) {
  const ExperimentConfig cfg = load(opts);
  if (!cfg.sweep) throw ConfigError("sweep", "section [sweep] is required");
  const SweepSection& sw = *cfg.sweep;
  const auto xs = grid(sw.min, sw.max, sw.step);
  CsvCurve csv;

  if (sw.mode == SweepMode::Repeater) {
    const auto& p = cfg.system;
    csv.columns = {"length", "t_link", "rho_net", "qber", "p_raw", "p_det"};
    std::vector<std::vector<double>> rows(xs.size());
    parallel_for(xs.size(), opts.threads, [&](std::size_t i) {
      const double t = photonics::fiber_transmission({p.alpha, xs[i]});
      const auto r = analytics::repeater_net_rate(sw.n_sections, t, p.eta, p.p_dark);
      rows[i] = {xs[i], t, r.rho_net, r.qber, r.p_raw, r.p_det};
    });
    std::optional<double> first_zero;
    for (auto& row : rows) {
      if (!first_zero && row[2] <= 0.0) first_zero = row[0];
      csv.add_row(std::move(row));
    }
    const double cutoff = analytics::repeater_cutoff_distance(sw.n_sections, p.alpha, p.eta, p.p_dark);
    out << fmt::format("repeater sections: {}  cutoff distance: {:.3f} km  first grid zero: {}\n", sw.n_sections,
                       cutoff, first_zero ? fmt::format("{:.3f} km", *first_zero) : std::string("none"));
  } else {
    csv.columns = {sw.variable, "r_sift", "qber", "qber_opt", "qber_det", "qber_acc", "i_ab", "i_ae_max", "r_net"};
    if (sw.monte_carlo) {
      csv.columns.push_back("mc_sift_rate");
      csv.columns.push_back("mc_qber");
    }
    std::vector<std::vector<double>> rows(xs.size());
    parallel_for(xs.size(), opts.threads, [&](std::size_t i) {
      analytics::SystemParams p = cfg.system;
      set_variable(p, sw.variable, xs[i]);
      const auto r = analytics::rate_model(p, sw.accounting);
      std::vector<double> row{xs[i], r.r_sift, r.qber, r.qber_opt, r.qber_det, r.qber_acc, r.i_ab, r.i_ae_max, r.r_net};
      if (sw.monte_carlo) {
        ExperimentConfig at = cfg;
        at.system = p;
        auto session = to_session(at);
        session.seed = derive_stream(cfg.seed, i)();
        session.keep_records = false;
        const auto res = protocols::run_session(session);
        row.push_back(double(res.sifted_count) / double(res.n_pulses) * p.f_rep);
        row.push_back(res.qber_estimate);
      }
      rows[i] = std::move(row);
    });
    std::optional<double> first_zero;
    for (auto& row : rows) {
      if (!first_zero && row[8] <= 0.0) first_zero = row[0];
      csv.add_row(std::move(row));
    }
    const std::string grid_zero = first_zero ? format_number(*first_zero) : std::string("none");
    if (sw.variable == "length") {
      const double dist = analytics::max_secure_distance(cfg.system, sw.accounting);
      out << fmt::format("max secure distance: {:.3f} km  first grid zero: {}\n", dist, grid_zero);
    } else {
      out << fmt::format("first grid {} with zero net rate: {}\n", sw.variable, grid_zero);
    }
  }

  if (opts.out) {
    write_csv(*opts.out, csv);
  } else {
    out << to_csv(csv);
  }
  return kOk;
}

int cmd_thresholds(const CommandOptions&, std::ostream& out) {
  const auto t = analytics::security_thresholds();
  struct Row {
    double value;
    const char* label;
  };
  std::vector<Row> rows{
      {t.d_coherent, "coherent attacks: 1 - 2 h(D) = 0"},
      {t.d0, "individual attacks: 1 - h(D) = I_max(D), (1 - 1/sqrt 2)/2"},
      {t.d_ir_disentangle, "full intercept-resend disentangles Alice and Bob"},
      {t.d_ad_limit, "advantage distillation limit: 1 - 1/sqrt 2"},
  };
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.value < b.value; });
  out << "qber      bound\n";
  for (const auto& r : rows) out << fmt::format("{:.6f}  {}\n", r.value, r.label);
  return kOk;
}

int cmd_compare(const CommandOptions& opts, std::ostream& out) {
  const ExperimentConfig cfg = load(opts);
  if (cfg.n_pulses < 100000) throw ConfigError("protocol.n_pulses", "compare needs at least 100000 pulses");
  Expectation e = session_expectation(cfg);
  e.qber += opts.corrupt_expectation;

  auto session = to_session(cfg);
  session.keep_records = false;
  const auto res = protocols::run_session(session);

  struct Line {
    const char* name;
    double analytic;
    double empirical;
    std::size_t n;
  };
  std::vector<Line> lines{
      {"qber", e.qber, res.qber_estimate, res.sifted_count},
      {"sift_rate", e.sift_rate, double(res.sifted_count) / double(res.n_pulses), res.n_pulses},
  };
  if (e.eve_agreement) lines.push_back({"eve_agreement", *e.eve_agreement, res.eve_agreement(), res.eve_guessed_sifted});

  CsvCurve csv;
  csv.columns = {"analytic", "empirical", "z"};
  bool ok = true;
  out << fmt::format("{:<14}{:>12}{:>12}{:>9}\n", "quantity", "analytic", "empirical", "z");
  for (const auto& l : lines) {
    const double z = z_score(l.empirical, l.analytic, l.n);
    ok = ok && std::abs(z) <= 4.0;
    out << fmt::format("{:<14}{:>12.6f}{:>12.6f}{:>9.3f}\n", l.name, l.analytic, l.empirical, z);
    csv.add_row({l.analytic, l.empirical, z});
  }
  if (!e.eve_agreement) out << fmt::format("{:<14}{:>12}{:>12}{:>9}\n", "eve_agreement", "n/a", "n/a", "n/a");
  if (opts.out) write_csv(*opts.out, csv);
  if (!ok) throw ComparisonFailed("compare: at least one |z| exceeds 4");
  out << "all |z| <= 4\n";
  return kOk;
}

int cmd_repeater(const CommandOptions& opts, std::ostream& out) {
  ExperimentConfig cfg;
  if (opts.config) cfg = load(opts);
  if (opts.sections < 1) throw ConfigError("--sections", "must be >= 1");
  const auto& p = cfg.system;
  const SweepSection sw = cfg.sweep.value_or(SweepSection{"length", 0.0, 150.0, 1.0});
  if (sw.variable != "length") throw ConfigError("sweep.variable", "repeater curves run over length");
  const auto xs = grid(sw.min, sw.max, sw.step);

  CsvCurve csv;
  csv.columns = {"length"};
  for (int n = 1; n <= opts.sections; ++n) csv.columns.push_back(fmt::format("rho_net_{}", n));
  std::vector<std::vector<double>> rows(xs.size());
  parallel_for(xs.size(), opts.threads, [&](std::size_t i) {
    const double t = photonics::fiber_transmission({p.alpha, xs[i]});
    rows[i] = {xs[i]};
    for (int n = 1; n <= opts.sections; ++n) {
      rows[i].push_back(analytics::repeater_net_rate(n, t, p.eta, p.p_dark).rho_net);
    }
  });
  for (auto& row : rows) csv.add_row(std::move(row));

  for (int n = 1; n <= opts.sections; ++n) {
    out << fmt::format("sections: {}  rate at 0 km: {:.6g}  cutoff distance: {:.3f} km\n", n,
                       analytics::repeater_net_rate(n, 1.0, p.eta, p.p_dark).rho_net,
                       analytics::repeater_cutoff_distance(n, p.alpha, p.eta, p.p_dark));
  }
  if (opts.out) {
    write_csv(*opts.out, csv);
  } else {
    out << to_csv(csv);
  }
  return kOk;
}

int cmd_distill_demo(const CommandOptions& opts, std::ostream& out) {
  distill::KeyPair keys;
  double eve_guess = opts.eve_guess;
  double target = 1e-4;
  std::uint64_t seed = opts.seed.value_or(1);
  if (opts.config) {
    const ExperimentConfig cfg = load(opts);
    seed = cfg.seed;
    auto session = to_session(cfg);
    const auto res = protocols::run_session(session);
    auto [a, b] = protocols::sift(res.records);
    keys = {std::move(a), std::move(b)};
    if (cfg.distill) target = cfg.distill->target_error;
    out << fmt::format("sifted key from session: {} bits, qber {:.6f}\n", keys.alice.size(), res.qber_estimate);
  } else {
    if (!(opts.error_rate >= 0.0 && opts.error_rate <= 0.5)) throw ConfigError("--error-rate", "must lie in [0, 0.5]");
    if (opts.bits < 2) throw ConfigError("--bits", "must be >= 2");
    Rng rng = derive_stream(seed, 0);
    keys.alice.resize(opts.bits);
    keys.bob.resize(opts.bits);
    for (std::size_t i = 0; i < opts.bits; ++i) {
      keys.alice[i] = static_cast<std::uint8_t>(random_bit(rng));
      keys.bob[i] = keys.alice[i] ^ static_cast<std::uint8_t>(bernoulli(rng, opts.error_rate));
    }
    out << fmt::format("synthetic keys: {} bits, error rate {:.6f}\n", opts.bits, opts.error_rate);
  }
  if (!(eve_guess >= 0.5 && eve_guess <= 1.0)) throw ConfigError("--eve-guess", "must lie in [0.5, 1]");

  CsvCurve csv;
  csv.columns = {"round", "length", "error", "predicted_error"};
  Rng rng = derive_stream(seed, 1);
  double err = distill::empirical_error_rate(keys.alice, keys.bob);
  csv.add_row({0.0, double(keys.alice.size()), err, err});
  out << fmt::format("parity rounds (target {:.3g}):\n", target);
  int round = 0;
  while (err > target && keys.alice.size() >= 2) {
    const double predicted = distill::parity_round_map(err);
    auto step = distill::parity_error_correct(keys.alice, keys.bob, rng, 1.0);
    keys = std::move(step.keys);
    err = distill::empirical_error_rate(keys.alice, keys.bob);
    ++round;
    csv.add_row({double(round), double(keys.alice.size()), err, predicted});
    out << fmt::format("  round {}: {} bits, error {:.6f} (map of previous: {:.6f})\n", round, keys.alice.size(), err,
                       predicted);
  }

  out << "xor privacy amplification on Eve's guess probability:\n";
  double g = eve_guess;
  for (int r = 1; r <= 3; ++r) {
    const double next = distill::xor_guess_map(g);
    out << fmt::format("  round {}: {:.6f} -> {:.6f}\n", r, g, next);
    g = next;
  }
  if (opts.out) write_csv(*opts.out, csv);
  return kOk;
}

int run_command(std::string_view name, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (name == "simulate") return cmd_simulate(opts, out);
    if (name == "sweep") return cmd_sweep(opts, out);
    if (name == "thresholds") return cmd_thresholds(opts, out);
    if (name == "compare") return cmd_compare(opts, out);
    if (name == "repeater") return cmd_repeater(opts, out);
    if (name == "distill-demo") return cmd_distill_demo(opts, out);
    err << "unknown command '" << name << "'\n";
    return kConfigFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const ComparisonFailed& e) {
    err << e.what() << '\n';
    return kComparisonFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

}  // namespace qkd::cli
