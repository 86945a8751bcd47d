#pragma once

#include "chainscat/types.hpp"

namespace chainscat {

/// Unitary 2d x 2d scattering matrix with block layout
///
///     S = [ r^L  t^R ]
///         [ t^L  r^R ]
///
/// mapping incoming amplitudes (a^L, b^R) to outgoing (b^L, a^R). The
/// constructor checks shape only; unitarity is checked by validate().
class ScatteringMatrix {
 public:
  explicit ScatteringMatrix(CMatrix m);

  /// Perfect transmitter (r = 0, t = 1), the identity of compose().
  static ScatteringMatrix identity(int d);
  static ScatteringMatrix from_blocks(const CMatrix& r_left, const CMatrix& t_right,
                                      const CMatrix& t_left, const CMatrix& r_right);

  int channels() const noexcept { return d_; }
  const CMatrix& matrix() const noexcept { return m_; }

  auto r_left() const { return m_.topLeftCorner(d_, d_); }
  auto t_right() const { return m_.topRightCorner(d_, d_); }
  auto t_left() const { return m_.bottomLeftCorner(d_, d_); }
  auto r_right() const { return m_.bottomRightCorner(d_, d_); }

 private:
  CMatrix m_;
  int d_;
};

/// K-pseudo-unitary 2d x 2d transfer matrix [x1 x2; x3 x4] mapping
/// (a^L, b^L) to (a^R, b^R).
class TransferMatrix {
 public:
  explicit TransferMatrix(CMatrix m);

  static TransferMatrix identity(int d);
  /// K = diag(1_d, -1_d)
  static CMatrix metric(int d);

  int channels() const noexcept { return d_; }
  const CMatrix& matrix() const noexcept { return m_; }

  auto x1() const { return m_.topLeftCorner(d_, d_); }
  auto x2() const { return m_.topRightCorner(d_, d_); }
  auto x3() const { return m_.bottomLeftCorner(d_, d_); }
  auto x4() const { return m_.bottomRightCorner(d_, d_); }

 private:
  CMatrix m_;
  int d_;
};

/// Mean transmission/reflection probability and their shared variance.
struct TransportStats {
  double transmission = 0.0;  ///< <Sigma_x> = tr(t^dag t)/d
  double reflection = 0.0;    ///< <Pi_x>
  double variance = 0.0;      ///< (<Pi_x^2> - R^2)/(d+1)
};

enum class Side { left, right };

/// max |S^dag S - 1|
double unitarity_residual(const ScatteringMatrix& s);
/// max |T^dag K T - K|
double pseudo_unitarity_residual(const TransferMatrix& t);

bool validate(const ScatteringMatrix& s, double tol = tolerance::kUnitarity);
bool validate(const TransferMatrix& t, double tol = tolerance::kUnitarity);

/// Throws SingularBlockError("t^R", ...) when t^R is not invertible.
TransferMatrix s_to_t(const ScatteringMatrix& s);
/// Throws SingularBlockError("x4", ...) when x4 is not invertible.
ScatteringMatrix t_to_s(const TransferMatrix& t);

/// Scattering matrix of `chain` followed on the right by `generator`.
///
/// Satisfies T[compose(a, b)] = T[b] T[a]. Throws StructuralError on a
/// channel mismatch and ResonantCavityError when 1 - r_n^R r^L is singular.
ScatteringMatrix compose(const ScatteringMatrix& chain, const ScatteringMatrix& generator);

/// Nearest unitary matrix in Frobenius norm (polar factor U V^dag of the SVD).
ScatteringMatrix nearest_unitary(const ScatteringMatrix& s);

/// Transport measures from the left or right blocks.
TransportStats transport(const ScatteringMatrix& s, Side side = Side::left);

}  // namespace chainscat
