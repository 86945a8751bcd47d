#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace chainscat {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Numerical thresholds shared by all modules.
namespace tolerance {
/// max-norm residual accepted by validate() for S^dag S - 1 and T^dag K T - K
inline constexpr double kUnitarity = 1e-9;
/// round trips S -> T -> S
inline constexpr double kRoundTrip = 1e-10;
/// blocks whose reciprocal condition number falls below 1/kMaxCondition are singular
inline constexpr double kMaxCondition = 1e12;
/// relative half-width of the unit-circle band used for spectral classification
inline constexpr double kSpectral = 1e-8;
/// |D| below this is the marginal single-channel case
inline constexpr double kMarginal = 1e-12;
/// relative distance under which transfer eigenvalues are clustered as degenerate
inline constexpr double kDegenerate = 1e-6;
}  // namespace tolerance

/// Reduce an angle to (-pi, pi].
inline double wrap_phase(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

/// Reduce an angle to [0, 2pi).
inline double wrap_positive(double x) {
  double y = std::fmod(x, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  if (y >= kTwoPi) y -= kTwoPi;
  return y;
}

}  // namespace chainscat
