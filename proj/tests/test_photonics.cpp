#include <cmath>

#include <gtest/gtest.h>

#include "qkd/photonics.hpp"
#include "stats.hpp"

using namespace qkd;
using namespace qkd::photonics;

namespace {

// P(n >= 2 | n >= 1) by explicit summation of the Poisson mass
double multiphoton_by_summation(double mu) {
  double term = std::exp(-mu);
  double p1 = 0.0;
  double tail = 0.0;
  for (int n = 1; n < 200; ++n) {
    term *= mu / n;
    if (n == 1) p1 = term;
    else tail += term;
  }
  return tail / (tail + p1);
}

}  // namespace

TEST(Poisson, VacuumProbabilityAndMean) {
  Rng rng(5);
  const int n = 1000000;
  int empty = 0;
  long total = 0;
  for (int i = 0; i < n; ++i) {
    const int k = poisson_photon_number(0.1, rng);
    empty += k == 0;
    total += k;
  }
  EXPECT_NEAR(empty / double(n), 0.904837418, 0.002);
  EXPECT_NEAR(total / double(n), 0.1, 0.002);
}

TEST(Poisson, RejectsNonPositiveMu) {
  Rng rng(1);
  EXPECT_THROW(poisson_photon_number(0.0, rng), DomainError);
  EXPECT_THROW(poisson_photon_number(-1.0, rng), DomainError);
}

TEST(Multiphoton, ReferenceValues) {
  EXPECT_NEAR(multiphoton_prob(0.1), 0.0491668055224942, 1e-12);
  EXPECT_NEAR(multiphoton_prob(0.02), 0.00996666688888591, 1e-12);
  EXPECT_THROW(multiphoton_prob(0.0), DomainError);
}

TEST(Multiphoton, SmallMuAsymptote) {
  for (double mu : {1e-3, 1e-5, 1e-7}) EXPECT_NEAR(multiphoton_prob(mu) / (mu / 2), 1.0, mu);
}

TEST(Multiphoton, MatchesSummationAndIsMonotone) {
  double prev = 0.0;
  for (int i = 1; i <= 500; ++i) {
    const double mu = i * 0.01;
    const double v = multiphoton_prob(mu);
    EXPECT_NEAR(v, multiphoton_by_summation(mu), 1e-12) << mu;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Fiber, Examples) {
  // 3 dB is a factor 10^-0.3, half only to three digits
  EXPECT_NEAR(fiber_transmission({2.0, 1.5}), std::pow(10.0, -0.3), 1e-15);
  EXPECT_NEAR(fiber_transmission({2.0, 1.5}), 0.5, 2e-3);
  EXPECT_EQ(fiber_transmission({0.25, 0.0}), 1.0);
  EXPECT_NEAR(fiber_transmission({0.25, 40.0}), 0.1, 1e-15);
  EXPECT_THROW(fiber_transmission({-1.0, 1.0}), ConfigError);
}

TEST(Fiber, MultiplicativeInLength) {
  for (double a : {0.2, 0.35, 2.0}) {
    for (double l1 : {0.0, 3.0, 17.5}) {
      for (double l2 : {1.0, 42.0}) {
        EXPECT_NEAR(fiber_transmission({a, l1 + l2}), fiber_transmission({a, l1}) * fiber_transmission({a, l2}), 1e-12);
      }
    }
  }
}

TEST(LossDb, Examples) {
  EXPECT_EQ(loss_db_from_fraction(0.0), 0.0);
  EXPECT_NEAR(loss_db_from_fraction(50.0), 3.01029995663981, 1e-12);
  EXPECT_NEAR(loss_db_from_fraction(90.0), 10.0, 1e-12);
  EXPECT_THROW(loss_db_from_fraction(100.0), DomainError);
}

TEST(LossDb, InvertsTransmission) {
  for (double a : {0.2, 0.25, 2.0}) {
    for (double l : {0.5, 10.0, 33.3}) {
      const double pct = 100.0 * (1.0 - fiber_transmission({a, l}));
      EXPECT_NEAR(loss_db_from_fraction(pct), a * l, 1e-10 * a * l + 1e-7);
    }
  }
}

TEST(Click, Deterministic) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_FALSE(detector_click(0, {0.5, 0.0}, rng));
    EXPECT_TRUE(detector_click(1, {1.0, 0.0}, rng));
  }
}

TEST(Click, EmpiricalRateExample) {
  Rng rng(10);
  const int n = 1000000;
  int clicks = 0;
  for (int i = 0; i < n; ++i) clicks += detector_click(1, {0.1, 1e-4}, rng);
  EXPECT_NEAR(clicks / double(n), 0.10009, 0.001);
}

TEST(Click, GridWithin4Sigma) {
  Rng rng(11);
  const int n = 100000;
  for (int photons : {0, 1, 3}) {
    for (double eta : {0.05, 0.5}) {
      for (double dark : {0.0, 1e-3, 0.05}) {
        const double p = 1.0 - std::pow(1.0 - eta, photons) * (1.0 - dark);
        int clicks = 0;
        for (int i = 0; i < n; ++i) clicks += detector_click(photons, {eta, dark}, rng);
        EXPECT_NEAR(clicks / double(n), p, band4(p, n) + 1e-12) << photons << ' ' << eta << ' ' << dark;
      }
    }
  }
}

TEST(Nep, Examples) {
  const double nu = optical_frequency(700e-9);
  EXPECT_EQ(nep({0.5, 0.0}, 0.0, nu), 0.0);
  EXPECT_NEAR(nep({0.5, 0.0}, 100.0, nu) / nep({0.5, 0.0}, 50.0, nu), std::sqrt(2.0), 1e-12);
  // h c / lambda / eta * sqrt(2 R) with h = 6.62607e-34, c = 2.99792e8
  EXPECT_NEAR(nep({0.5, 0.0}, 50.0, nu), 5.675550792685714e-18, 1e-30);
  EXPECT_THROW(nep({0.0, 0.0}, 1.0, nu), DomainError);
}

TEST(Sources, Validation) {
  EXPECT_THROW((FaintPulseSource{0.0, 1e6}.validate()), ConfigError);
  EXPECT_THROW((PairSource{0.0, 1.5, 1e6}.validate()), ConfigError);
  EXPECT_THROW((PairSource{0.99999, 0.5, 0.0}.validate()), ConfigError);
  EXPECT_NO_THROW((PairSource{0.1, 2.0 / 3.0, 1e6}.validate()));
  EXPECT_THROW(Detector({0.1, 1.0}).validate(), ConfigError);
}
