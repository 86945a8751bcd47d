#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace chainscat {

/// Result of a straight-line or power-law fit. For the measure-scaling
/// models the line is -log(mu) = slope * x + intercept and the prefactor is
/// exp(intercept), so mu = exp(-slope * x) / prefactor.
struct FitResult {
  std::string model;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double prefactor = 0.0;
  double prefactor_stderr = 0.0;
  /// Weighted residual sum of squares on the transformed scale.
  double residual = 0.0;
  std::size_t points = 0;
  std::vector<std::string> warnings;

  /// Prediction mu(x) = exp(-slope x - intercept).
  double predict(double x) const;
  /// {"model": .., "params": {..}, "stderr": {..}, "residual": .., "points": ..}
  std::string json() const;
};

/// Weighted least squares y = slope x + intercept with weights 1/var(y).
/// Standard errors treat the variances as known.
FitResult weighted_line_fit(std::span<const double> x, std::span<const double> y, std::span<const double> var);

enum class ScalingModel { ballistic, total_localised };

/// x = d(d+1) for the ballistic measure, x = sqrt(d) for total localisation.
double scaling_abscissa(ScalingModel model, int d);

struct MeasurePoint {
  int d = 0;
  std::uint64_t hits = 0;
  std::uint64_t n = 0;
};

/// Weighted fit of -log(hits/n) against the model abscissa. Weights come
/// from the Wilson interval through the delta method. Zero-hit points are
/// excluded with a warning. Needs at least two usable points (three are
/// required by the experiment runner).
FitResult fit_measure_scaling(std::span<const MeasurePoint> points, ScalingModel model);

/// Power-law tail density ~ a t^-p on [lo, hi] from a binned sample.
struct TailFit {
  double lo = 0.0, hi = 0.0;  ///< window snapped to bin edges
  std::uint64_t count = 0;    ///< samples in the window
  double exponent = 0.0;      ///< p
  double exponent_stderr = 0.0;
  /// a for p fixed at 3: mass in window = a (lo^-2 - hi^-2) / 2.
  double amplitude3 = 0.0;
  double amplitude3_stderr = 0.0;
};

/// Binned maximum-likelihood exponent over the bins fully inside [lo, hi].
/// `scale` rescales the edges (t -> t / scale) before fitting, so a tail in
/// raw units can be fitted in scaled units.
TailFit fit_power_tail(std::span<const double> edges, std::span<const std::uint64_t> counts, std::uint64_t total,
                       double lo, double hi, double scale = 1.0);

}  // namespace chainscat
