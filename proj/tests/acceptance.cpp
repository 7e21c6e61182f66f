// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qkd/analytics.hpp"
#include "qkd/attacks.hpp"
#include "qkd/cli/commands.hpp"
#include "qkd/distill.hpp"
#include "qkd/infomath.hpp"
#include "qkd/protocols.hpp"

using namespace qkd;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!cond) {
      ok = false;
      detail += " [x]";
    }
  }
};

struct Criterion {
  int id;
  const char* title;
  double time_limit_s;  // <= 0: no limit
  std::function<void(Check&)> body;
};

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

protocols::SessionResult lossless_bb84(const attacks::AttackStrategy& attack, std::uint64_t seed) {
  protocols::SessionConfig c;
  c.protocol = protocols::ProtocolKind::BB84;
  c.n_pulses = 100000;
  c.source = photonics::FaintPulseSource{1.0, 1e6};
  c.channel = {0.25, 0.0};
  c.detector = {1.0, 0.0};
  c.attack = attack;
  c.seed = seed;
  c.keep_records = false;
  return protocols::run_session(c);
}

analytics::SystemParams link_params(double mu, double f_rep, double alpha, double eta, double p_dark) {
  analytics::SystemParams p;
  p.mu = mu;
  p.f_rep = f_rep;
  p.alpha = alpha;
  p.eta = eta;
  p.p_dark = p_dark;
  p.n_det = 2;
  p.p_opt = 0.0;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void thresholds(Check& c) {
  const auto t = analytics::security_thresholds();
  c.require(within(t.d0, 0.146447, 1e-6), fmt::format("D0 = {:.9f}", t.d0));
  c.require(within(t.d_coherent, 0.1100, 1e-3), fmt::format("coherent bound = {:.6f}", t.d_coherent));
}

void intercept_resend(Check& c) {
  const auto full = lossless_bb84(attacks::InterceptResend{1.0}, 101);
  c.require(within(full.qber_estimate, 0.25, 0.01), fmt::format("qber(f=1) = {:.4f}", full.qber_estimate));
  c.require(within(full.eve_agreement(), 0.75, 0.01), fmt::format("eve agreement = {:.4f}", full.eve_agreement()));
  const auto tenth = lossless_bb84(attacks::InterceptResend{0.1}, 102);
  c.require(within(tenth.qber_estimate, 0.025, 0.005), fmt::format("qber(f=0.1) = {:.4f}", tenth.qber_estimate));
}

void breidbart(Check& c) {
  const auto p = attacks::breidbart_prediction();
  c.require(within(p.qber, 0.25, 1e-15), fmt::format("predicted qber = {:.17g}", p.qber));
  c.require(within(p.info_ae, 0.399, 1e-3), fmt::format("predicted info = {:.6f}", p.info_ae));
  const auto s = lossless_bb84(attacks::Breidbart{1.0}, 103);
  c.require(within(s.eve_agreement(), 0.854, 0.01), fmt::format("simulated agreement = {:.4f}", s.eve_agreement()));
}

void symmetric_curve(Check& c) {
  const double at0 = attacks::symmetric_attack_info(0.0);
  const double at_half = attacks::symmetric_attack_info(0.5);
  c.require(within(at0, 0.0, 1e-12) && within(at_half, 1.0, 1e-12),
            fmt::format("I_max(0) = {:.3g}, I_max(0.5) = {:.12f}", at0, at_half));
  const double d = 1e-5;
  const double slope = attacks::symmetric_attack_info(d) / d;
  const double expected = 2.0 / std::log(2.0);
  c.require(std::abs(slope / expected - 1.0) <= 0.01, fmt::format("slope near 0 = {:.5f} vs {:.5f}", slope, expected));
  const double d0 = analytics::security_thresholds().d0;
  const double gap = attacks::symmetric_attack_info(d0) - mutual_info_bob(d0);
  c.require(std::abs(gap) <= 1e-9, fmt::format("I_max - I_AB at D0 = {:.3g}", gap));
}

void exclusion(Check& c) {
  double worst = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double d = 0.5 * i / 100.0;
    worst = std::max(worst, mutual_info_bob(d) + attacks::symmetric_attack_info(d));
  }
  c.require(worst <= 1.0 + 1e-9, fmt::format("max I_AB + I_max = {:.12f}", worst));
}

void repeater(Check& c) {
  const double n1 = analytics::repeater_cutoff_distance(1, 0.25, 0.1, 1e-4);
  const double n2 = analytics::repeater_cutoff_distance(2, 0.25, 0.1, 1e-4);
  c.require(within(n1, 90.0, 3.0), fmt::format("n=1 cutoff {:.3f} km", n1));
  c.require(n2 > n1, fmt::format("n=2 cutoff {:.3f} km", n2));
  const double r1 = analytics::repeater_net_rate(1, 1.0, 0.1, 1e-4).rho_net;
  const double r2 = analytics::repeater_net_rate(2, 1.0, 0.1, 1e-4).rho_net;
  c.require(r2 < r1, fmt::format("rate at 0 km n=1 {:.4g}, n=2 {:.4g}", r1, r2));
}

void distance_band(Check& c) {
  const double d1550 = analytics::max_secure_distance(link_params(0.1, 1e7, 0.25, 0.1, 1e-5));
  const double single = analytics::max_secure_distance(link_params(1.0, 1e6, 0.25, 0.1, 1e-5));
  const double d800 = analytics::max_secure_distance(link_params(0.1, 1e7, 2.0, 0.5, 1e-7));
  c.require(d1550 >= 70.0 && d1550 <= 110.0, fmt::format("1550 nm {:.2f} km", d1550));
  c.require(single > d1550, fmt::format("single {:.2f} km", single));
  c.require(d800 >= 15.0 && d800 <= 35.0, fmt::format("800 nm {:.2f} km", d800));
}

void distillation(Check& c) {
  Rng rng(104);
  distill::KeyPair k;
  const std::size_t n = 200000;
  k.alice.resize(n);
  k.bob.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    k.alice[i] = static_cast<std::uint8_t>(random_bit(rng));
    k.bob[i] = k.alice[i] ^ static_cast<std::uint8_t>(bernoulli(rng, 0.25));
  }
  const double before = distill::empirical_error_rate(k.alice, k.bob);
  // target between 0.1 and 0.25 stops after exactly one round
  const auto r = distill::parity_error_correct(k.alice, k.bob, rng, 0.2);
  const double after = distill::empirical_error_rate(r.keys.alice, r.keys.bob);
  c.require(r.report.rounds == 1, fmt::format("{} round(s)", r.report.rounds));
  c.require(within(after, 0.10, 0.01), fmt::format("parity round {:.4f} -> {:.4f} (oracle {:.4f})", before, after,
                                                   distill::parity_round_map(before)));
  const double g = distill::xor_guess_map(0.6);
  c.require(std::abs(g - 0.52) <= 1e-15, fmt::format("xor round 0.6 -> {:.17g}", g));
}

void beamsplitter(Check& c) {
  const auto p = attacks::beamsplitter_prediction(0.1, 0.01);
  c.require(within(p.qber, 1.0 / 6.0, 1e-15) && within(p.info_ae, 2.0 / 3.0, 1e-15),
            fmt::format("prediction ({:.6f}, {:.6f})", p.qber, p.info_ae));
  c.require(within(p.info_ae, 4.0 * p.qber, 1e-15), "info = 4 qber");
  const double db[] = {10.0, 14.0, 20.0};
  const double quoted[] = {0.25, 0.1, 0.025};
  for (int i = 0; i < 3; ++i) {
    const double mu = attacks::beamsplitter_matched_mu(std::pow(10.0, -db[i] / 10.0));
    const double rel = mu / quoted[i] - 1.0;
    c.require(std::abs(rel) <= 0.05, fmt::format("{:.0f} dB mu {:.4f} vs {} ({:+.1f}%)", db[i], mu, quoted[i], 100 * rel));
  }
}

void advantage(Check& c) {
  auto first_advantage = [](double d) {
    const auto joint = attacks::symmetric_joint_distribution(d);
    for (int n = 1; n <= 25; n += 2) {
      const auto r = distill::advantage_distillation(joint, n);
      if (r.eve_error > r.bob_error) return n;
    }
    return 0;
  };
  const int at20 = first_advantage(0.20);
  const int at35 = first_advantage(0.35);
  c.require(at20 > 0, fmt::format("D=0.20 first block {}", at20));
  c.require(at35 == 0, at35 ? fmt::format("D=0.35 block {}", at35) : std::string("D=0.35 none"));
}

void chsh(Check& c) {
  const double s0 = analytics::chsh_smax(0.0);
  const double sd0 = analytics::chsh_smax(analytics::security_thresholds().d0);
  c.require(within(s0, 2.0 * std::sqrt(2.0), 1e-9), fmt::format("S(0) = {:.12f}", s0));
  c.require(within(sd0, 2.0, 1e-9), fmt::format("S(D0) = {:.12f}", sd0));
  int disagree = 0;
  for (int i = 0; i < 100; ++i) {
    const double d = 0.5 * (i + 0.5) / 100.0;
    const double ie = attacks::symmetric_attack_info(d);
    const bool positive = distill::csiszar_korner_rate(mutual_info_bob(d), ie, ie) > 0.0;
    if (positive != analytics::chsh_violation(d)) ++disagree;
  }
  c.require(disagree == 0, fmt::format("{} disagreements on 100 points", disagree));
}

void determinism(Check& c) {
  const fs::path dir = fs::temp_directory_path() / fmt::format("qkdsim_acceptance_{}", ::getpid());
  fs::create_directories(dir);
  const fs::path configs = QKD_CONFIG_DIR;
  struct Case {
    const char* command;
    const char* config;
  };
  const Case cases[] = {{"simulate", "intercept_resend.ini"}, {"sweep", "fiber_1550.ini"}, {"sweep", "mc_sweep.ini"},
                        {"sweep", "repeater.ini"},            {"repeater", nullptr},         {"distill-demo", nullptr}};
  int k = 0;
  int identical = 0;
  for (const auto& cs : cases) {
    std::vector<std::string> outputs;
    for (unsigned threads : {1u, 1u, 8u}) {
      cli::CommandOptions o;
      if (cs.config) o.config = configs / cs.config;
      o.threads = threads;
      o.out = dir / fmt::format("run{}.csv", k++);
      std::ostringstream out, err;
      const int code = cli::run_command(cs.command, o, out, err);
      if (code != 0) c.require(false, fmt::format("{} exited {}: {}", cs.command, code, err.str()));
      outputs.push_back(slurp(*o.out));
    }
    const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
    if (same)
      ++identical;
    else
      c.require(false, fmt::format("{} {} differs", cs.command, cs.config ? cs.config : ""));
  }
  fs::remove_all(dir);
  c.require(identical == int(std::size(cases)), fmt::format("{}/{} commands byte-identical", identical, std::size(cases)));
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "threshold constants", 1.0, thresholds},
      {2, "intercept-resend", 10.0, intercept_resend},
      {3, "breidbart", 10.0, breidbart},
      {4, "symmetric-attack curve", 0.0, symmetric_curve},
      {5, "information exclusion", 0.0, exclusion},
      {6, "repeater scaling", 1.0, repeater},
      {7, "distance bands", 0.0, distance_band},
      {8, "distillation arithmetic", 0.0, distillation},
      {9, "beamsplitter attack", 0.0, beamsplitter},
      {10, "advantage distillation", 30.0, advantage},
      {11, "chsh", 0.0, chsh},
      {12, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.require(false, fmt::format("exception: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.time_limit_s > 0.0) c.require(secs < cr.time_limit_s, fmt::format("{:.3f} s < {} s", secs, cr.time_limit_s));
    if (!c.ok) ++failed;
    std::cout << fmt::format("criterion {:>2}: {}  {} ({})\n", cr.id, c.ok ? "PASS" : "FAIL", cr.title, c.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
