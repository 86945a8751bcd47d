#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chainscat/smatrix.hpp"

namespace chainscat {

enum class TransportClass { ballistic, partially_localised, totally_localised };

std::string_view to_string(TransportClass c);

/// Eigenvalues of a transfer matrix sorted by (|kappa|, arg kappa), with the
/// unit-circle band bookkeeping. Cheap: no eigenvectors.
struct TransferSpectrum {
  CVector eigenvalues;
  int outside = 0;    ///< |kappa| > 1 + tol
  int inside = 0;     ///< |kappa| < 1 - tol
  int on_circle = 0;  ///< the rest
  double max_modulus = 1.0;

  int d_u() const { return outside; }
};

TransferSpectrum transfer_spectrum(const TransferMatrix& t, double tol = tolerance::kSpectral);

/// max over kappa of the distance from 1/conj(kappa) to the nearest
/// eigenvalue, relative to |1/conj(kappa)|.
double pairing_residual(const CVector& eigenvalues);

TransportClass class_of(int d_u, int d);

struct SpectralClassification {
  int d = 0;
  CVector spectrum;  ///< sorted as in TransferSpectrum
  CMatrix right;     ///< column i: unit-norm right eigenvector v_i = [alpha_i; beta_i]
  CMatrix left;      ///< row i of right^{-1}: left eigenvector u_i^dag = [zeta_i, eta_i]
  int d_u = 0;
  TransportClass label = TransportClass::ballistic;
  /// log max |kappa|
  double decay_rate = 0.0;
  /// log min |kappa| over the outside modes; 0 when there are none
  double slowest_rate = 0.0;
  std::vector<int> outside;  ///< indices of |kappa| > 1 + tol
  double eigenvector_condition = 1.0;
  /// eigenvector_condition above tolerance::kMaxCondition
  bool defective = false;

  /// {"spectrum": [[re, im], ...], "d_u": .., "label": .., "I": ..}
  std::string json() const;
};

/// Full spectral classification of T[S]. Propagates SingularBlockError from
/// s_to_t. An ill-conditioned eigenvector matrix sets `defective` rather
/// than throwing.
SpectralClassification classify(const ScatteringMatrix& s, double tol = tolerance::kSpectral);
SpectralClassification classify(const TransferMatrix& t, double tol = tolerance::kSpectral);

struct ModeStructure {
  Complex kappa;
  bool outside = false;
  bool on_circle = false;
  int cluster = 0;           ///< index of the degeneracy cluster
  bool degenerate = false;   ///< cluster has more than one member; norm tests skipped
  double vKv = 0.0;          ///< v^dag K v for unit-norm v = |alpha|^2 - |beta|^2
  double alpha_norm2 = 0.0;
  double beta_norm2 = 0.0;
  double uKu = 0.0;          ///< same for the unit-norm left eigenvector
  double zeta_norm2 = 0.0;
  double eta_norm2 = 0.0;
};

struct EigenvectorStructure {
  SpectralClassification classification;
  std::vector<ModeStructure> modes;
  bool has_degeneracy = false;
  /// max |v^dag K v| over non-degenerate outside modes
  double max_outside_vKv = 0.0;
  /// min |v^dag K v| over non-degenerate on-circle modes (1 if none)
  double min_circle_vKv = 1.0;
};

/// Throws DefectiveSpectrumError when the eigenvector matrix is defective.
EigenvectorStructure eigenvector_structure(const ScatteringMatrix& s, double tol = tolerance::kSpectral);

/// Non-decaying part of the transmission of the chain S^{(.)n}.
///
/// X_n is the lower-right block of T^n = P diag(kappa^n) P^{-1}. The outside
/// modes span the column space of {beta_i} and the row space of {eta_i}; X_n
/// is compressed onto the orthogonal complements of both and
/// T_0 = |X~_n^{-1}|_F^2 (normalised: divided by d).
class PlateauModel {
 public:
  explicit PlateauModel(const ScatteringMatrix& generator, double tol = tolerance::kSpectral);

  const SpectralClassification& classification() const noexcept { return spec_; }
  /// Input is ballistic: the value is the full transmission.
  bool degenerate_use() const noexcept { return spec_.label == TransportClass::ballistic; }

  double unnormalized(std::int64_t n) const;
  double normalized(std::int64_t n) const { return unnormalized(n) / spec_.d; }

 private:
  SpectralClassification spec_;
  std::vector<int> rest_;
  CMatrix rest_right_;   ///< Q_L^dag beta_i for remaining modes, columns
  CMatrix rest_left_;    ///< eta_i Q_R for remaining modes, rows
};

struct PlateauValue {
  double unnormalized = 0.0;
  double normalized = 0.0;
  bool degenerate_use = false;   ///< ballistic input
  bool totally_localised = false;
};

PlateauValue plateau_transmission(const ScatteringMatrix& generator, std::int64_t n);

struct EvolveOptions {
  /// S_1; the generator itself when empty.
  std::optional<ScatteringMatrix> initial;
  /// Replace S_n by its nearest unitary when the residual exceeds kUnitarity / 10.
  bool reunitarize = false;
  /// The plateau window requires the decaying term below this.
  double plateau_threshold = 1e-6;
  /// Evaluate T_0[S_n] along the trace (needs a localised generator).
  bool track_plateau = true;
};

struct TraceRow {
  std::int64_t n = 0;
  double T = 0.0;
  double R = 0.0;
  double residual = 0.0;
  double T0 = 0.0;  ///< normalised plateau at this n; 0 when not tracked
};

struct ChainTrace {
  std::vector<TraceRow> rows;
  SpectralClassification classification;
  bool plateau_tracked = false;

  /// Last 25% of the trace, provided the decaying term is below threshold there.
  bool plateau_found = false;
  std::int64_t window_start = 0;
  double plateau = 0.0;           ///< mean T_n over the window
  double band_lo = 0.0, band_hi = 0.0;        ///< min/max T_n over the window
  double model_lo = 0.0, model_hi = 0.0;      ///< min/max T_0[S_n] over the window
  double max_plateau_deviation = 0.0;         ///< max |T_n - T_0[S_n]| over the window

  /// -slope of the log upper envelope of |T_n - T_0[S_n]| against n (n >= 4,
  /// above the rounding floor), 0 when not fitted.
  double fitted_rate = 0.0;
  std::size_t fit_points = 0;
  /// fitted_rate / classification.slowest_rate
  double rate_ratio = 0.0;
  /// 1 or 2 when rate_ratio is within 20% of it, 0 otherwise.
  int beta = 0;

  double min_T = 1.0;
  double max_residual = 0.0;
  int reunitarizations = 0;

  /// Rows "n,T_n,R_n,unitarity_residual" with a header line.
  std::string csv(const std::string& comment = {}) const;
};

/// Iterate S_{n+1} = S_n (.) S_gen for n = 1 .. n_max. A ResonantCavityError
/// is rethrown with the chain length in its message.
ChainTrace evolve_chain(const ScatteringMatrix& generator, std::int64_t n_max, const EvolveOptions& options = {});

}  // namespace chainscat
