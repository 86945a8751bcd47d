#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chainscat {

/// Streaming count/mean/central moments up to third order, with min and max.
/// merge() uses the pairwise update formulas, so partial accumulators from
/// independent workers combine without revisiting samples.
struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;  ///< sum of squared deviations
  double m3 = 0.0;  ///< sum of cubed deviations
  double min = 0.0;
  double max = 0.0;

  void add(double x);
  void merge(const Moments& other);

  /// Unbiased sample variance (n - 1 denominator).
  double variance() const;
  double stderr_mean() const;
  /// Sample skewness g1 = sqrt(n) m3 / m2^(3/2).
  double skewness() const;
  /// Standard error of g1 under normality.
  double skewness_stderr() const;
};

/// Fixed-edge histogram with under/overflow tallies.
class Histogram {
 public:
  Histogram() = default;
  explicit Histogram(std::vector<double> edges);

  static Histogram linear(double lo, double hi, std::size_t bins);
  static Histogram logarithmic(double lo, double hi, std::size_t bins);

  void add(double x);
  void merge(const Histogram& other);

  std::size_t bins() const noexcept { return counts_.size(); }
  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t underflow() const noexcept { return underflow_; }
  std::uint64_t overflow() const noexcept { return overflow_; }
  std::uint64_t in_range() const;

 private:
  std::vector<double> edges_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t underflow_ = 0;
  std::uint64_t overflow_ = 0;
};

/// Histogram plus moments of a Monte Carlo observable.
///
/// Samples recorded with add_point_mass() (e.g. ballistic matrices with
/// max|kappa| = 1) and non-finite samples (e.g. I = -inf) are tallied
/// separately and excluded from the histogram and the moments, but count
/// towards the normalisation of the density.
struct EnsembleStats {
  Histogram histogram;
  Moments moments;
  std::uint64_t point_mass = 0;
  double point_mass_at = 0.0;
  std::uint64_t non_finite = 0;

  EnsembleStats() = default;
  explicit EnsembleStats(Histogram h) : histogram(std::move(h)) {}

  void add(double x);
  void add_point_mass() { ++point_mass; }
  void merge(const EnsembleStats& other);

  std::uint64_t total() const { return moments.count + point_mass + non_finite; }
  /// count / (total * width) for bin i.
  double density(std::size_t i) const;
  /// Histogram mass including under/overflow plus point mass and non-finite tallies; 1 by construction.
  double mass() const;
  double point_mass_fraction() const;

  /// CSV rows "bin_lo,bin_hi,count,density" with a header line.
  std::string histogram_csv(const std::string& comment = {}) const;
};

/// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t n, double z = 1.959963984540054);

double normal_cdf(double x, double mean, double sd);

/// One-sample Kolmogorov-Smirnov distance between samples and N(mean, sd^2).
double ks_distance_normal(std::span<const double> samples, double mean, double sd);
/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::span<const double> a, std::span<const double> b);
/// Asymptotic one-sample critical value sqrt(-ln(alpha/2)/2)/sqrt(n).
double ks_critical(std::size_t n, double alpha = 0.01);
double ks_critical(std::size_t n, std::size_t m, double alpha = 0.01);

/// Median (copies and partially sorts).
double median(std::vector<double> values);

/// Standard error of the mean of a correlated series by non-overlapping batch means.
double batch_means_stderr(std::span<const double> series, std::size_t batches = 32);

}  // namespace chainscat
