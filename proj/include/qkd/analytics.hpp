#pragma once

// Closed-form rate and QBER models, security thresholds, segmented-link
// (repeater) scaling and the CHSH connection.

#include <optional>
#include <vector>

#include "qkd/infomath.hpp"

namespace qkd::analytics {

/// Which bound on Eve's information enters the net rate.
///  - Individual: optimal symmetric individual attack, I_max(D).
///  - Coherent: I_AE = h(D), so the rate 1 - 2 h(D) vanishes near 11%.
///  - Beamsplitter: individual bound plus the realistic beamsplitter attack
///    on the fraction of detections Eve can supply from multi-photon pulses.
enum class EveAccounting { Individual, Coherent, Beamsplitter };

struct SystemParams {
  double mu = 0.1;
  double f_rep = 10e6;  // Hz
  double q = 1.0;
  double alpha = 0.25;  // dB / km
  double length = 0.0;  // km
  Probability eta = 0.1;
  Probability p_dark = 1e-5;  // per gate and detector
  std::optional<int> n_det;   // defaults: 2 active, 4 passive
  bool passive_choice = false;
  std::optional<double> p_opt = 0.0;
  std::optional<double> visibility;
  Probability p_acc = 0.0;

  void validate() const;
  int detectors() const { return n_det.value_or(passive_choice ? 4 : 2); }
  double optical_error() const;
};

struct RateReport {
  double t_link = 1.0;
  double r_raw = 0.0;
  double r_sift = 0.0;
  double r_opt = 0.0;
  double r_det = 0.0;
  double r_acc = 0.0;
  double qber = 0.0;
  double qber_opt = 0.0;
  double qber_det = 0.0;
  double qber_acc = 0.0;
  double i_ab = 0.0;
  double i_ae_max = 0.0;
  double r_net = 0.0;
};

RateReport rate_model(const SystemParams& p, EveAccounting accounting = EveAccounting::Individual);

/// QBER_opt = (1 - V)/2.
double qber_opt_from_visibility(double visibility);

struct SweepPoint {
  double length = 0.0;
  RateReport report;
};

struct DistanceCurve {
  std::vector<SweepPoint> points;
  std::optional<double> max_secure_distance;  // first grid length with r_net = 0
};

/// Evaluates rate_model on lengths l_min, l_min + step, ... <= l_max.
/// Grid points may be computed on `threads` workers; output order is fixed.
DistanceCurve distance_sweep(const SystemParams& p, double l_min, double l_max, double step,
                             EveAccounting accounting = EveAccounting::Individual, unsigned threads = 1);

/// Length at which the net rate reaches zero, by root finding on
/// I_AB - I_AE. Zero when no length gives a positive rate.
double max_secure_distance(const SystemParams& p, EveAccounting accounting = EveAccounting::Individual);

struct RepeaterRate {
  double rho_net = 0.0;
  double qber = 0.0;
  double p_raw = 0.0;
  double p_det = 0.0;
};

/// Link split into n sections with n detectors:
/// P_raw = t eta^n, P_det = (t^(1/n) eta + (1 - t^(1/n) eta) p_dark)^n - t eta^n,
/// rho_net = (P_raw + P_det) max(0, 1 - QBER/15%).
RepeaterRate repeater_net_rate(int n_sections, double t_link, double eta, double p_dark);

inline constexpr double kRepeaterQberCutoff = 0.15;

/// Fiber length at which repeater_net_rate drops to zero.
double repeater_cutoff_distance(int n_sections, double alpha, double eta, double p_dark);

struct SecurityThresholds {
  double d_coherent = 0.0;        // h(D) = 1/2
  double d0 = 0.0;                // Bob and Eve information curves cross
  double d_ir_disentangle = 0.0;  // intercept-resend disentangles Alice and Bob
  double d_ad_limit = 0.0;        // advantage distillation limit 1 - 1/sqrt(2)
};

SecurityThresholds security_thresholds();

/// S_max(D) = (1 - 2D) 2 sqrt(2).
double chsh_smax(double qber);
inline bool chsh_violation(double qber) { return chsh_smax(qber) > 2.0; }

/// I_AB + I_AE <= n_qubits for totals over n_qubits.
bool theorem2_check(double i_ab, double i_ae, double n_qubits);

/// argmax over mu in (0, 1] of the net rate with all other parameters of
/// `base` fixed. nullopt when no mu gives a positive rate.
std::optional<double> optimal_mu(const SystemParams& base, EveAccounting accounting = EveAccounting::Individual);

std::optional<double> optimal_mu(double alpha, double length, double eta, double p_dark, int n_det,
                                 EveAccounting accounting = EveAccounting::Individual);

}  // namespace qkd::analytics
