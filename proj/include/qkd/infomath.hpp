#pragma once

// Qubit geometry on the Poincare sphere and the Shannon-information
// primitives shared by every other module.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qkd/errors.hpp"
#include "qkd/rng.hpp"

namespace qkd {

namespace tol {
inline constexpr double algebraic = 1e-12;
inline constexpr double sigmas = 4.0;
}  // namespace tol

/// Poincare-sphere coordinates (m1, m2, m3). Pure states sit on the unit
/// sphere, mixed states inside it.
template <typename Scalar>
using BlochVector = Eigen::Matrix<Scalar, 3, 1>;

using Bloch = BlochVector<double>;

using BitString = std::vector<std::uint8_t>;

/// A real number constrained to [0, 1]. Converts implicitly both ways so
/// that passing an out-of-range double where a Probability is expected
/// raises DomainError at the call boundary.
class Probability {
 public:
  constexpr Probability() = default;
  Probability(double value) : value_(value) {  // NOLINT(google-explicit-constructor)
    if (!(value >= 0.0 && value <= 1.0)) {
      throw DomainError("probability out of [0,1]: " + std::to_string(value));
    }
  }
  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }  // NOLINT

 private:
  double value_ = 0.0;
};

template <typename Scalar>
bool is_pure(const BlochVector<Scalar>& m) {
  return std::abs(m.norm() - Scalar(1)) <= Scalar(tol::algebraic);
}

template <typename Scalar>
bool is_physical(const BlochVector<Scalar>& m) {
  return m.norm() <= Scalar(1) + Scalar(tol::algebraic);
}

/// Uniform depolarization: maps a pure state to one of norm `eta`.
template <typename Scalar>
BlochVector<Scalar> shrink(const BlochVector<Scalar>& m, Scalar eta) {
  if (!(eta >= Scalar(0) && eta <= Scalar(1))) throw DomainError("shrinking factor out of [0,1]");
  return eta * m;
}

enum class BasisId { Z, X, Y, Custom };

struct MeasurementBasis {
  BasisId id = BasisId::Z;
  double angle = 0.0;  // great-circle angle from +Z towards +X; meaningful for Custom
  Bloch axis = Bloch::UnitZ();

  static MeasurementBasis z() { return {BasisId::Z, 0.0, Bloch::UnitZ()}; }
  static MeasurementBasis x() { return {BasisId::X, M_PI / 2, Bloch::UnitX()}; }
  static MeasurementBasis y() { return {BasisId::Y, 0.0, Bloch::UnitY()}; }
  static MeasurementBasis custom(double angle) {
    return {BasisId::Custom, angle, Bloch(std::sin(angle), 0.0, std::cos(angle))};
  }

  /// Bit 0 is the +axis eigenstate, bit 1 the -axis one.
  Bloch eigenstate(int bit) const { return bit == 0 ? axis : Bloch(-axis); }

  bool same_as(const MeasurementBasis& other) const {
    if (id != other.id) return false;
    return id != BasisId::Custom || std::abs(angle - other.angle) <= tol::algebraic;
  }
};

/// h(p) = -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
template <typename Scalar>
Scalar binary_entropy(Scalar p) {
  using std::log2;
  if (!(p >= Scalar(0) && p <= Scalar(1))) throw DomainError("binary_entropy: p outside [0,1]");
  if (p == Scalar(0) || p == Scalar(1)) return Scalar(0);
  return -p * log2(p) - (Scalar(1) - p) * log2(Scalar(1) - p);
}

/// Alice-Bob mutual information of a binary symmetric channel with error D.
template <typename Scalar>
Scalar mutual_info_bob(Scalar error_rate) {
  if (!(error_rate >= Scalar(0) && error_rate <= Scalar(0.5))) {
    throw DomainError("mutual_info_bob: error rate outside [0,0.5]");
  }
  return Scalar(1) - binary_entropy(error_rate);
}

/// Probability of the "0" outcome when a (possibly mixed) state m is
/// measured along `axis`: (1 + m.axis)/2.
template <typename Scalar>
Scalar outcome_probability(const BlochVector<Scalar>& m, const BlochVector<Scalar>& axis) {
  const Scalar p = (Scalar(1) + m.dot(axis)) / Scalar(2);
  return std::clamp(p, Scalar(0), Scalar(1));
}

/// |<s|b>|^2 for two pure states.
template <typename Scalar>
Scalar overlap_probability(const BlochVector<Scalar>& s, const BlochVector<Scalar>& b) {
  if (!is_pure(s) || !is_pure(b)) throw DomainError("overlap_probability: non-unit Bloch vector");
  return outcome_probability(s, b);
}

/// Samples a measurement of `state` in `basis`; returns the bit whose
/// eigenstate was found.
inline int measure(const Bloch& state, const MeasurementBasis& basis, Rng& rng) {
  if (!is_physical(state)) throw DomainError("measure: Bloch vector outside the sphere");
  return uniform01(rng) < outcome_probability(state, basis.axis) ? 0 : 1;
}

}  // namespace qkd
