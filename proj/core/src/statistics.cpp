#include "chainscat/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "chainscat/error.hpp"
#include "chainscat/matrix_io.hpp"

namespace chainscat {

void Moments::add(double x) {
  const double n1 = static_cast<double>(count);
  ++count;
  const double n = static_cast<double>(count);
  const double delta = x - mean;
  const double delta_n = delta / n;
  const double term = delta * delta_n * n1;
  mean += delta_n;
  m3 += term * delta_n * (n - 2.0) - 3.0 * delta_n * m2;
  m2 += term;
  if (count == 1) {
    min = max = x;
  } else {
    min = std::min(min, x);
    max = std::max(max, x);
  }
}

void Moments::merge(const Moments& o) {
  if (o.count == 0) return;
  if (count == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(count);
  const double nb = static_cast<double>(o.count);
  const double n = na + nb;
  const double delta = o.mean - mean;
  const double m2_new = m2 + o.m2 + delta * delta * na * nb / n;
  m3 = m3 + o.m3 + delta * delta * delta * na * nb * (na - nb) / (n * n) + 3.0 * delta * (na * o.m2 - nb * m2) / n;
  m2 = m2_new;
  mean = (na * mean + nb * o.mean) / n;
  count += o.count;
  min = std::min(min, o.min);
  max = std::max(max, o.max);
}

double Moments::variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }

double Moments::stderr_mean() const {
  return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
}

double Moments::skewness() const {
  if (count < 3 || m2 <= 0.0) return 0.0;
  const double n = static_cast<double>(count);
  return std::sqrt(n) * m3 / std::pow(m2, 1.5);
}

double Moments::skewness_stderr() const {
  const double n = static_cast<double>(count);
  if (count < 3) return std::numeric_limits<double>::infinity();
  return std::sqrt(6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0)));
}

Histogram::Histogram(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) throw StructuralError("histogram needs at least one bin");
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (!(edges_[i] > edges_[i - 1])) throw StructuralError("histogram edges must be strictly increasing");
  }
  counts_.assign(edges_.size() - 1, 0);
}

Histogram Histogram::linear(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw StructuralError("linear histogram needs bins > 0 and hi > lo");
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  e.back() = hi;
  return Histogram(std::move(e));
}

Histogram Histogram::logarithmic(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(lo > 0.0) || !(hi > lo)) throw StructuralError("log histogram needs bins > 0 and 0 < lo < hi");
  std::vector<double> e(bins + 1);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (std::size_t i = 0; i <= bins; ++i) {
    e[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(bins));
  }
  e.front() = lo;
  e.back() = hi;
  return Histogram(std::move(e));
}

void Histogram::add(double x) {
  if (x < edges_.front()) {
    ++underflow_;
  } else if (x >= edges_.back()) {
    ++overflow_;
  } else {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
    ++counts_[static_cast<std::size_t>(it - edges_.begin()) - 1];
  }
}

void Histogram::merge(const Histogram& other) {
  if (other.edges_ != edges_) throw StructuralError("cannot merge histograms with different edges");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  underflow_ += other.underflow_;
  overflow_ += other.overflow_;
}

std::uint64_t Histogram::in_range() const {
  std::uint64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

void EnsembleStats::add(double x) {
  if (!std::isfinite(x)) {
    ++non_finite;
    return;
  }
  moments.add(x);
  if (histogram.bins() > 0) histogram.add(x);
}

void EnsembleStats::merge(const EnsembleStats& other) {
  if (histogram.bins() > 0 || other.histogram.bins() > 0) histogram.merge(other.histogram);
  moments.merge(other.moments);
  point_mass += other.point_mass;
  non_finite += other.non_finite;
}

double EnsembleStats::density(std::size_t i) const {
  const auto n = total();
  if (n == 0) return 0.0;
  const auto& e = histogram.edges();
  return static_cast<double>(histogram.counts()[i]) / (static_cast<double>(n) * (e[i + 1] - e[i]));
}

double EnsembleStats::mass() const {
  const auto n = total();
  if (n == 0) return 0.0;
  const std::uint64_t recorded = histogram.bins() > 0
                                     ? histogram.in_range() + histogram.underflow() + histogram.overflow()
                                     : moments.count;
  return static_cast<double>(recorded + point_mass + non_finite) / static_cast<double>(n);
}

double EnsembleStats::point_mass_fraction() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(point_mass) / static_cast<double>(n);
}

std::string EnsembleStats::histogram_csv(const std::string& comment) const {
  std::ostringstream out;
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "bin_lo,bin_hi,count,density\n";
  const auto& e = histogram.edges();
  for (std::size_t i = 0; i < histogram.bins(); ++i) {
    out << format_double(e[i]) << ',' << format_double(e[i + 1]) << ',' << histogram.counts()[i] << ','
        << format_double(density(i)) << '\n';
  }
  return out.str();
}

std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
  // the endpoints are exact at zero or full hits
  const double lo = hits == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = hits == n ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

double ks_distance_normal(std::span<const double> samples, double mean, double sd) {
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i], mean, sd);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical(std::size_t n, double alpha) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

double ks_critical(std::size_t n, std::size_t m, double alpha) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt((nn + mm) / (nn * mm));
}

double median(std::vector<double> values) {
  if (values.empty()) throw StructuralError("median of empty sample");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<long>(mid)));
  }
  return m;
}

double batch_means_stderr(std::span<const double> series, std::size_t batches) {
  if (batches < 2 || series.size() < 2 * batches) throw StructuralError("batch_means_stderr: series too short");
  const std::size_t len = series.size() / batches;
  Moments m;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < len; ++k) s += series[b * len + k];
    m.add(s / static_cast<double>(len));
  }
  return m.stderr_mean();
}

}  // namespace chainscat
