#pragma once

// Photon-number statistics of sources, fiber loss and detector clicks.

#include "qkd/infomath.hpp"

namespace qkd::photonics {

inline constexpr double kPlanck = 6.62607e-34;     // J s
inline constexpr double kSpeedOfLight = 2.99792e8;  // m / s

/// Attenuated laser: Poisson photon number with mean `mu`.
struct FaintPulseSource {
  double mu = 0.1;
  double f_rep = 10e6;  // Hz

  void validate() const;
};

/// Entangled-pair source described at the statistics level.
struct PairSource {
  Probability p_acc = 0.0;  // second pair in the same window
  double mu_eff = 2.0 / 3.0;
  double f_rep = 10e6;

  void validate() const;
};

struct FiberChannel {
  double alpha = 0.25;  // dB / km
  double length = 0.0;  // km

  void validate() const;
};

/// Gated single-photon detector. Dead time and afterpulsing are not modeled.
struct Detector {
  Probability eta = 1.0;
  Probability p_dark = 0.0;  // per gate

  void validate() const;
};

int poisson_photon_number(double mu, Rng& rng);

/// P(n > 1 | n > 0) for a Poisson source.
double multiphoton_prob(double mu);

/// 10^(-alpha L / 10)
double fiber_transmission(const FiberChannel& ch);

/// -10 log10(1 - percent/100)
double loss_db_from_fraction(double loss_percent);

/// Click probability of one detector hit by `photons` photons:
/// 1 - (1-eta)^photons (1 - p_dark).
double click_probability(int photons, const Detector& det);

bool detector_click(int photons, const Detector& det, Rng& rng);

/// Noise-equivalent power (h nu / eta) sqrt(2 R), in W / sqrt(Hz).
double nep(const Detector& det, double dark_rate, double nu);

inline double optical_frequency(double wavelength_m) { return kSpeedOfLight / wavelength_m; }

}  // namespace qkd::photonics
