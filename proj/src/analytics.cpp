#include "qkd/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "qkd/attacks.hpp"
#include "qkd/photonics.hpp"

namespace qkd::analytics {

namespace {

using boost::math::tools::eps_tolerance;

/// I_AB - I_AE for the given accounting; negative once Eve knows more.
double information_margin(const SystemParams& p, EveAccounting accounting, double t_link, double qber,
                          double* i_ab_out = nullptr, double* i_ae_out = nullptr) {
  const double clamped = std::min(qber, 0.5);
  double i_ab = 0.0;
  double i_ae = 0.0;
  switch (accounting) {
    case EveAccounting::Individual:
      i_ab = mutual_info_bob(clamped);
      i_ae = attacks::symmetric_attack_info(clamped);
      break;
    case EveAccounting::Coherent:
      i_ab = mutual_info_bob(clamped);
      i_ae = binary_entropy(clamped);
      break;
    case EveAccounting::Beamsplitter: {
      const double f = t_link > 0.0 ? attacks::beamsplitter_exploitable_fraction(p.mu, t_link) : 1.0;
      const auto bs = attacks::beamsplitter_prediction(p.mu, std::max(t_link, 1e-300));
      const double mixed = std::min(0.5, (1.0 - f) * clamped + f * bs.qber);
      i_ab = mutual_info_bob(mixed);
      i_ae = f * bs.info_ae + (1.0 - f) * attacks::symmetric_attack_info(clamped);
      break;
    }
  }
  if (i_ab_out) *i_ab_out = i_ab;
  if (i_ae_out) *i_ae_out = i_ae;
  return i_ab - i_ae;
}

double margin_at(SystemParams p, EveAccounting accounting, double length) {
  p.length = length;
  const RateReport r = rate_model(p, accounting);
  return r.i_ab - r.i_ae_max;
}

/// First root of a decreasing-then-negative function on [0, inf).
double first_zero(const std::function<double(double)>& f, double step0) {
  if (f(0.0) <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = step0;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return std::numeric_limits<double>::infinity();
  }
  const auto [a, b] = boost::math::tools::bisect(f, lo, hi, eps_tolerance<double>(45));
  return 0.5 * (a + b);
}

}  // namespace

void SystemParams::validate() const {
  if (!(mu > 0.0)) throw ConfigError("mu", "mean photon number must be > 0");
  if (!(f_rep > 0.0)) throw ConfigError("f_rep", "repetition rate must be > 0");
  if (q != 1.0 && q != 0.5) throw ConfigError("q", "must be 1 or 0.5");
  if (!(alpha >= 0.0)) throw ConfigError("alpha", "attenuation must be >= 0");
  if (!(length >= 0.0)) throw ConfigError("length", "fiber length must be >= 0");
  if (!(p_dark.value() < 1.0)) throw ConfigError("p_dark", "must be < 1");
  if (!(p_acc.value() < 1.0)) throw ConfigError("p_acc", "must be < 1");
  if (n_det && *n_det < 1) throw ConfigError("n_det", "must be >= 1");
  if (p_opt.has_value() == visibility.has_value()) {
    throw ConfigError("p_opt", "exactly one of p_opt and visibility must be given");
  }
  if (p_opt && !(*p_opt >= 0.0 && *p_opt <= 1.0)) throw ConfigError("p_opt", "must lie in [0, 1]");
  if (visibility && !(*visibility >= 0.0 && *visibility <= 1.0)) {
    throw ConfigError("visibility", "must lie in [0, 1]");
  }
}

double SystemParams::optical_error() const {
  return p_opt ? *p_opt : qber_opt_from_visibility(visibility.value_or(1.0));
}

double qber_opt_from_visibility(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) throw DomainError("visibility outside [0,1]");
  return (1.0 - visibility) / 2.0;
}

RateReport rate_model(const SystemParams& p, EveAccounting accounting) {
  p.validate();
  const double n = p.detectors();
  RateReport r;
  r.t_link = photonics::fiber_transmission({p.alpha, p.length});
  r.r_raw = p.q * p.f_rep * p.mu * r.t_link * p.eta;
  r.r_sift = 0.5 * r.r_raw;
  r.qber_opt = p.optical_error();
  r.r_opt = r.r_sift * r.qber_opt;
  r.r_det = 0.25 * p.f_rep * p.p_dark * n;
  r.r_acc = 0.25 * p.p_acc * p.f_rep * r.t_link * n * p.eta;

  const double detected = r.t_link * p.eta;
  r.qber_det = p.p_dark == 0.0 ? 0.0
               : detected > 0.0 ? p.p_dark * n / (detected * 2.0 * p.q * p.mu)
                                : std::numeric_limits<double>::infinity();
  r.qber_acc = p.p_acc / (2.0 * p.q * p.mu);
  r.qber = r.qber_opt + r.qber_det + r.qber_acc;

  const double margin = information_margin(p, accounting, r.t_link, r.qber, &r.i_ab, &r.i_ae_max);
  r.r_net = r.r_sift * std::max(0.0, margin);
  return r;
}

DistanceCurve distance_sweep(const SystemParams& p, double l_min, double l_max, double step,
                             EveAccounting accounting, unsigned threads) {
  if (!(l_min >= 0.0 && l_max >= l_min)) throw DomainError("distance_sweep: need 0 <= l_min <= l_max");
  if (!(step > 0.0)) throw DomainError("distance_sweep: step must be > 0");
  p.validate();
  const auto count = static_cast<std::size_t>(std::floor((l_max - l_min) / step + 1e-9)) + 1;

  DistanceCurve curve;
  curve.points.resize(count);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < count; i += stride) {
      SystemParams at = p;
      at.length = l_min + double(i) * step;
      curve.points[i] = {at.length, rate_model(at, accounting)};
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  for (const auto& pt : curve.points) {
    if (pt.report.r_net <= 0.0) {
      curve.max_secure_distance = pt.length;
      break;
    }
  }
  return curve;
}

double max_secure_distance(const SystemParams& p, EveAccounting accounting) {
  p.validate();
  return first_zero([&](double length) { return margin_at(p, accounting, length); }, 10.0);
}

RepeaterRate repeater_net_rate(int n_sections, double t_link, double eta, double p_dark) {
  if (n_sections < 1) throw DomainError("repeater_net_rate: need at least one section");
  if (!(t_link >= 0.0 && t_link <= 1.0 && eta >= 0.0 && eta <= 1.0 && p_dark >= 0.0 && p_dark <= 1.0)) {
    throw DomainError("repeater_net_rate: probabilities outside [0,1]");
  }
  const double n = n_sections;
  const double section = std::pow(t_link, 1.0 / n) * eta;
  RepeaterRate r;
  r.p_raw = t_link * std::pow(eta, n);
  r.p_det = std::pow(section + (1.0 - section) * p_dark, n) - r.p_raw;
  const double total = r.p_raw + r.p_det;
  r.qber = total > 0.0 ? r.p_det / total : 0.0;
  r.rho_net = total * std::max(0.0, 1.0 - r.qber / kRepeaterQberCutoff);
  return r;
}

double repeater_cutoff_distance(int n_sections, double alpha, double eta, double p_dark) {
  if (!(alpha > 0.0)) throw DomainError("repeater_cutoff_distance: attenuation must be > 0");
  auto margin = [&](double length) {
    const double t = photonics::fiber_transmission({alpha, length});
    return kRepeaterQberCutoff - repeater_net_rate(n_sections, t, eta, p_dark).qber;
  };
  return first_zero(margin, 10.0);
}

SecurityThresholds security_thresholds() {
  SecurityThresholds s;
  s.d0 = (1.0 - 1.0 / std::sqrt(2.0)) / 2.0;
  const auto [a, b] = boost::math::tools::bisect([](double d) { return binary_entropy(d) - 0.5; }, 1e-9, 0.5,
                                                 eps_tolerance<double>(50));
  s.d_coherent = 0.5 * (a + b);
  s.d_ir_disentangle = 0.25;
  s.d_ad_limit = 1.0 - 1.0 / std::sqrt(2.0);
  return s;
}

double chsh_smax(double qber) {
  if (!(qber >= 0.0 && qber <= 0.5)) throw DomainError("chsh_smax: error rate outside [0,0.5]");
  return (1.0 - 2.0 * qber) * 2.0 * std::sqrt(2.0);
}

bool theorem2_check(double i_ab, double i_ae, double n_qubits) { return i_ab + i_ae <= n_qubits + 1e-9; }

std::optional<double> optimal_mu(const SystemParams& base, EveAccounting accounting) {
  auto rate = [&](double mu) {
    SystemParams p = base;
    p.mu = mu;
    return rate_model(p, accounting).r_net;
  };
  // coarse scan brackets the maximum; the net rate has kinks where the
  // exploitable fraction saturates, so Brent only refines locally
  constexpr int kGrid = 200;
  int best = 1;
  double best_rate = rate(1.0 / kGrid);
  for (int i = 2; i <= kGrid; ++i) {
    const double r = rate(double(i) / kGrid);
    if (r > best_rate) {
      best_rate = r;
      best = i;
    }
  }
  if (!(best_rate > 0.0)) return std::nullopt;
  const double lo = std::max(1e-6, double(best - 1) / kGrid);
  const double hi = std::min(1.0, double(best + 1) / kGrid);
  const auto [mu, neg_rate] =
      boost::math::tools::brent_find_minima([&](double m) { return -rate(m); }, lo, hi, 30);
  return -neg_rate >= best_rate ? mu : double(best) / kGrid;
}

std::optional<double> optimal_mu(double alpha, double length, double eta, double p_dark, int n_det,
                                 EveAccounting accounting) {
  SystemParams p;
  p.alpha = alpha;
  p.length = length;
  p.eta = eta;
  p.p_dark = p_dark;
  p.n_det = n_det;
  p.p_opt = 0.0;
  return optimal_mu(p, accounting);
}

}  // namespace qkd::analytics
