#include "chainscat/scaling_fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chainscat/error.hpp"
#include "chainscat/matrix_io.hpp"
#include "chainscat/statistics.hpp"

namespace chainscat {
namespace {

constexpr double kZ95 = 1.959963984540054;

// log-likelihood of a truncated power law t^-p on [lo, hi] for binned counts
double binned_loglik(double p, const std::vector<double>& e, const std::vector<double>& c) {
  auto prim = [p](double t) { return std::abs(p - 1.0) < 1e-12 ? std::log(t) : std::pow(t, 1.0 - p) / (1.0 - p); };
  const double norm = prim(e.back()) - prim(e.front());
  double ll = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] > 0.0) ll += c[i] * std::log((prim(e[i + 1]) - prim(e[i])) / norm);
  }
  return ll;
}

}  // namespace

double FitResult::predict(double x) const { return std::exp(-slope * x - intercept); }

std::string FitResult::json() const {
  const bool ball = model == "ballistic";
  const char* rate = ball ? "omega" : "zeta";
  const char* pre = ball ? "Omega" : "Z";
  std::ostringstream os;
  os << "{\"model\":\"" << model << "\",\"params\":{\"" << rate << "\":" << format_double(slope) << ",\"" << pre
     << "\":" << format_double(prefactor) << ",\"intercept\":" << format_double(intercept) << "},\"stderr\":{\""
     << rate << "\":" << format_double(slope_stderr) << ",\"" << pre << "\":" << format_double(prefactor_stderr)
     << ",\"intercept\":" << format_double(intercept_stderr) << "},\"residual\":" << format_double(residual)
     << ",\"points\":" << points << ",\"warnings\":[";
  for (std::size_t i = 0; i < warnings.size(); ++i) os << (i ? "," : "") << '"' << warnings[i] << '"';
  os << "]}";
  return os.str();
}

FitResult weighted_line_fit(std::span<const double> x, std::span<const double> y, std::span<const double> var) {
  if (x.size() != y.size() || x.size() != var.size()) throw StructuralError("weighted_line_fit: size mismatch");
  if (x.size() < 2) throw StructuralError("weighted_line_fit: need at least two points");
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(var[i] > 0.0)) throw StructuralError("weighted_line_fit: variances must be positive");
    const double w = 1.0 / var[i];
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
    swxx += w * x[i] * x[i];
    swxy += w * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  if (!(det > 0.0)) throw StructuralError("weighted_line_fit: abscissae are not distinct");
  FitResult f;
  f.slope = (sw * swxy - swx * swy) / det;
  f.intercept = (swxx * swy - swx * swxy) / det;
  f.slope_stderr = std::sqrt(sw / det);
  f.intercept_stderr = std::sqrt(swxx / det);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.slope * x[i] - f.intercept;
    f.residual += r * r / var[i];
  }
  f.prefactor = std::exp(f.intercept);
  f.prefactor_stderr = f.prefactor * f.intercept_stderr;
  f.points = x.size();
  return f;
}

double scaling_abscissa(ScalingModel model, int d) {
  return model == ScalingModel::ballistic ? static_cast<double>(d) * (d + 1) : std::sqrt(static_cast<double>(d));
}

FitResult fit_measure_scaling(std::span<const MeasurePoint> points, ScalingModel model) {
  std::vector<double> xs, ys, vs;
  std::vector<std::string> warnings;
  for (const MeasurePoint& p : points) {
    if (p.hits == 0 || p.n == 0) {
      warnings.push_back("d=" + std::to_string(p.d) + " has zero hits; excluded");
      continue;
    }
    const double mu = static_cast<double>(p.hits) / static_cast<double>(p.n);
    const auto [lo, hi] = wilson_interval(p.hits, p.n);
    const double sd_mu = (hi - lo) / (2.0 * kZ95);
    // Delta method: var(log mu) = var(mu) / mu^2. An estimate of exactly 1
    // has a one-sided interval; the floor keeps the weight finite.
    const double sd_log = std::max(sd_mu / mu, 1e-12);
    xs.push_back(scaling_abscissa(model, p.d));
    ys.push_back(-std::log(mu));
    vs.push_back(sd_log * sd_log);
  }
  FitResult f = weighted_line_fit(xs, ys, vs);
  f.model = model == ScalingModel::ballistic ? "ballistic" : "total_localised";
  f.warnings = std::move(warnings);
  return f;
}

TailFit fit_power_tail(std::span<const double> edges, std::span<const std::uint64_t> counts, std::uint64_t total,
                       double lo, double hi, double scale) {
  if (edges.size() != counts.size() + 1) throw StructuralError("fit_power_tail: edges/counts mismatch");
  std::vector<double> e;
  std::vector<double> c;
  const double slack = 1e-12 * std::max(1.0, hi);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double a = edges[i] / scale, b = edges[i + 1] / scale;
    if (a >= lo - slack && b <= hi + slack && a > 0.0) {
      if (e.empty() || std::abs(e.back() - a) > slack) {
        if (!e.empty()) throw StructuralError("fit_power_tail: window bins are not contiguous");
        e.push_back(a);
      }
      e.push_back(b);
      c.push_back(static_cast<double>(counts[i]));
    }
  }
  TailFit t;
  if (c.size() < 2) throw StructuralError("fit_power_tail: fewer than two bins inside the window");
  t.lo = e.front();
  t.hi = e.back();
  double n = 0.0;
  for (double x : c) n += x;
  t.count = static_cast<std::uint64_t>(n);
  if (t.count == 0) throw StructuralError("fit_power_tail: empty window");

  // Golden-section search on a bracket wide enough for any physical tail.
  double a = 0.5, b = 8.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = binned_loglik(x1, e, c), f2 = binned_loglik(x2, e, c);
  for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = binned_loglik(x2, e, c);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = binned_loglik(x1, e, c);
    }
  }
  t.exponent = 0.5 * (a + b);
  const double h = 1e-3;
  const double curv = (binned_loglik(t.exponent + h, e, c) - 2.0 * binned_loglik(t.exponent, e, c) +
                       binned_loglik(t.exponent - h, e, c)) /
                      (h * h);
  t.exponent_stderr = curv < 0.0 ? 1.0 / std::sqrt(-curv) : 0.0;

  const double span = std::pow(t.lo, -2.0) - std::pow(t.hi, -2.0);
  t.amplitude3 = 2.0 * (n / static_cast<double>(total)) / span;
  t.amplitude3_stderr = t.amplitude3 / std::sqrt(n);
  return t;
}

}  // namespace chainscat
