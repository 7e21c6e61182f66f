#include "qkd/photonics.hpp"

#include <cmath>
#include <random>

namespace qkd::photonics {

void FaintPulseSource::validate() const {
  if (!(mu > 0.0)) throw ConfigError("mu", "mean photon number must be > 0");
  if (!(f_rep > 0.0)) throw ConfigError("f_rep", "repetition rate must be > 0");
}

void PairSource::validate() const {
  if (!(p_acc.value() < 1.0)) throw ConfigError("p_acc", "must be < 1");
  if (!(mu_eff > 0.0 && mu_eff <= 1.0)) throw ConfigError("mu_eff", "must lie in (0, 1]");
  if (!(f_rep > 0.0)) throw ConfigError("f_rep", "repetition rate must be > 0");
}

void FiberChannel::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha", "attenuation must be >= 0");
  if (!(length >= 0.0)) throw ConfigError("length", "fiber length must be >= 0");
}

void Detector::validate() const {
  if (!(p_dark.value() < 1.0)) throw ConfigError("p_dark", "must be < 1");
}

int poisson_photon_number(double mu, Rng& rng) {
  if (!(mu > 0.0)) throw DomainError("poisson_photon_number: mu must be > 0");
  return std::poisson_distribution<int>(mu)(rng);
}

double multiphoton_prob(double mu) {
  if (!(mu > 0.0)) throw DomainError("multiphoton_prob: mu must be > 0");
  // expm1 keeps the ratio accurate as mu -> 0
  const double nonempty = -std::expm1(-mu);
  const double multi = nonempty - mu * std::exp(-mu);
  return multi / nonempty;
}

double fiber_transmission(const FiberChannel& ch) {
  ch.validate();
  return std::pow(10.0, -ch.alpha * ch.length / 10.0);
}

double loss_db_from_fraction(double loss_percent) {
  if (!(loss_percent >= 0.0 && loss_percent < 100.0)) {
    throw DomainError("loss_db_from_fraction: percentage must lie in [0, 100)");
  }
  return -10.0 * std::log10(1.0 - loss_percent / 100.0);
}

double click_probability(int photons, const Detector& det) {
  if (photons < 0) throw DomainError("click_probability: negative photon number");
  return 1.0 - std::pow(1.0 - det.eta, photons) * (1.0 - det.p_dark);
}

bool detector_click(int photons, const Detector& det, Rng& rng) {
  return bernoulli(rng, click_probability(photons, det));
}

double nep(const Detector& det, double dark_rate, double nu) {
  if (!(det.eta.value() > 0.0)) throw DomainError("nep: detector efficiency must be > 0");
  if (!(dark_rate >= 0.0)) throw DomainError("nep: dark count rate must be >= 0");
  if (!(nu > 0.0)) throw DomainError("nep: optical frequency must be > 0");
  return kPlanck * nu / det.eta * std::sqrt(2.0 * dark_rate);
}

}  // namespace qkd::photonics
