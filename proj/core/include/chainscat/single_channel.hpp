#pragma once

#include <cstdint>
#include <utility>

#include "chainscat/smatrix.hpp"

namespace chainscat {

/// Parameters of a single-channel scatterer
///
///     S = [ A e^{i alpha_L}   B e^{i beta_R}                          ]
///         [ B e^{i beta_L}   -A e^{i (beta_L + beta_R - alpha_L)}     ]
///
/// with A, B >= 0 and A^2 + B^2 = 1. Every 2x2 unitary with B > 0 has this form.
///
/// Both amplitudes are stored so that a tiny B keeps full relative precision.
struct SingleChannelParams {
  double A = 0.0;
  double B = 1.0;
  double alpha_L = 0.0;
  double beta_L = 0.0;
  double beta_R = 0.0;

  double lambda() const { return 0.5 * (beta_L + beta_R); }

  /// Generator with given A and lambda, beta_L - beta_R = 2 delta.
  static SingleChannelParams from_lambda(double A, double lambda, double alpha_L = 0.0, double delta = 0.0);
  /// Same, parametrised by the transmission amplitude.
  static SingleChannelParams from_transmission(double B, double lambda, double alpha_L = 0.0, double delta = 0.0);
};

ScatteringMatrix materialize(const SingleChannelParams& p);

/// Inverse of materialize(). Phases are reduced to [0, 2pi). Throws
/// StructuralError for d != 1 and DegenerateTransferError for a perfect
/// reflector (B = 0, transmission phases undefined).
SingleChannelParams parametrize(const ScatteringMatrix& s);

/// State of a single-channel chain of length n.
///
/// `phi` = beta_L + beta_R - alpha_L of the chain; the static map's chi is
/// phi + alpha_L of the generator. phi is kept in (-pi, pi]; the transmission
/// phases accumulate unwrapped.
/// `log_B` carries log B_n so it survives underflow of B_n itself.
struct ChainState1D {
  double A = 0.0;
  double B = 1.0;
  double log_B = 0.0;
  double phi = 0.0;
  double beta_L = 0.0;
  double beta_R = 0.0;
  std::int64_t n = 1;

  double chi(const SingleChannelParams& gen) const { return phi + gen.alpha_L; }
  double alpha_L() const { return beta_L + beta_R - phi; }

  /// Chain consisting of the single scatterer `first`.
  static ChainState1D single(const SingleChannelParams& first);
  /// State with amplitude A and static-map phase chi for generator `gen`.
  static ChainState1D from_static(double A, double chi, const SingleChannelParams& gen,
                                  double beta_L = 0.0, double beta_R = 0.0);
  static ChainState1D from_matrix(const ScatteringMatrix& s, std::int64_t n = 1);

  SingleChannelParams params() const;
  ScatteringMatrix to_matrix() const { return materialize(params()); }
};

/// One lengthening step S_{n+1} = S_n (.) gen of the autonomous map in (A, chi).
ChainState1D static_step(const ChainState1D& state, const SingleChannelParams& gen);

/// One lengthening step in (B, phi) with a position-dependent generator.
/// Identical dynamics to static_step expressed in the noisy-map variables.
ChainState1D noisy_step(const ChainState1D& state, const SingleChannelParams& gen);

/// Strong-disorder approximation: the chain is taken as a perfect reflector
/// (A_n = 1) in the update of B and phi. Only B, log_B, phi and n are advanced.
ChainState1D approximate_step(const ChainState1D& state, const SingleChannelParams& gen);

/// f(x, y) = x / sqrt(1 + 2 sqrt(1 - x^2) cos y + (1 - x^2)), the per-step
/// transmission factor of the strong-disorder map.
double transmission_factor(double x, double y);
/// log f(x, y), finite for x > 0 even when the denominator is tiny.
double log_transmission_factor(double x, double y);

/// D = A^2 - sin^2(lambda); negative is ballistic, positive localised.
double discriminant(const SingleChannelParams& gen);

/// Transfer eigenvalues ordered |kappa_1| <= |kappa_2|.
/// Throws DegenerateTransferError for A = 1.
std::pair<Complex, Complex> eigenvalues_1d(const SingleChannelParams& gen);

enum class FixedPointKind { elliptic, attractor };

struct FixedPointReport {
  FixedPointKind kind;
  double A;
  double chi;    ///< in (-pi, pi]
  double D;
  /// |kappa_1|; the localised contraction factor of (B_n, delta chi_n).
  double contraction;
};

/// Fixed point of the static map. Throws MarginalCaseError when |D| is
/// below tolerance::kMarginal.
FixedPointReport fixed_points(const SingleChannelParams& gen);

/// Integral of motion F(A_n, chi_n) of the static map.
/// Throws DegenerateTransferError for A_n = 1.
double integral_F(const ChainState1D& state, const SingleChannelParams& gen);

}  // namespace chainscat
