#include "chainscat/haar.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chainscat/disorder.hpp"
#include "chainscat/error.hpp"
#include "chainscat/matrix_io.hpp"
#include "chainscat/parallel.hpp"

namespace chainscat {
namespace {

constexpr std::uint64_t kHaarTag = 0x4aa5;
constexpr double kBulkTop = 4.0;
constexpr double kTailTop = 64.0;
constexpr double kTailFitLo = 4.0;
constexpr double kTailFitHi = 16.0;

Complex complex_gaussian(Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  // Unit variance per complex entry: E|z|^2 = 1.
  const double r = std::sqrt(-std::log(1.0 - u1));
  return std::polar(r, kTwoPi * u2);
}

void survey_one(HaarSampler& sampler, const SurveyOptions& options, HaarSurvey& out) {
  for (;;) {
    const ScatteringMatrix s = sampler.next();
    TransferMatrix t = TransferMatrix::identity(s.channels());
    try {
      t = s_to_t(s);
    } catch (const SingularBlockError&) {
      ++out.redraws;
      continue;
    }
    const TransferSpectrum spec = transfer_spectrum(t, options.tol);
    ++out.samples;
    ++out.du_counts[static_cast<std::size_t>(spec.d_u())];
    if (spec.d_u() == 0) {
      out.pmax.add_point_mass();
      for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
        if (std::abs(std::abs(spec.eigenvalues(i)) - 1.0) > 1e-3 * options.tol) {
          ++out.near_marginal;
          break;
        }
      }
    } else {
      out.pmax.add(spec.max_modulus);
    }
    if (options.keep_values) out.log_max_modulus.push_back(std::log(spec.max_modulus));
    return;
  }
}

HaarSurvey empty_survey(int d, const SurveyOptions& options) {
  HaarSurvey s;
  s.d = d;
  s.du_counts.assign(static_cast<std::size_t>(d) + 1, 0);
  s.pmax = EnsembleStats(Histogram(pmax_edges(d, options.bulk_bins, options.tail_bins)));
  s.pmax.point_mass_at = 1.0;
  return s;
}

HaarSurvey run_chunks(int d, std::uint64_t first_chunk, std::uint64_t chunks, std::uint64_t last_size,
                      const SurveyOptions& options) {
  if (d < 1) throw StructuralError("Haar survey: d must be at least 1");
  std::vector<HaarSurvey> parts(static_cast<std::size_t>(chunks));
  parallel_tasks(parts.size(), options.workers, [&](std::size_t c) {
    HaarSurvey part = empty_survey(d, options);
    HaarSampler sampler(d, options.seed, first_chunk + c);
    const std::uint64_t size = c + 1 == parts.size() ? last_size : kSurveyChunk;
    for (std::uint64_t k = 0; k < size; ++k) survey_one(sampler, options, part);
    parts[c] = std::move(part);
  });
  HaarSurvey total = empty_survey(d, options);
  for (const HaarSurvey& p : parts) total.merge(p);
  return total;
}

}  // namespace

CMatrix haar_unitary(int n, Rng& rng) {
  CMatrix z(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) z(i, j) = complex_gaussian(rng);
  }
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix& r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    const Complex rjj = r(j, j);
    const double m = std::abs(rjj);
    q.col(j) *= m > 0.0 ? rjj / m : Complex(1.0, 0.0);
  }
  return q;
}

HaarSampler::HaarSampler(int d, std::uint64_t seed, std::uint64_t stream)
    : d_(d), rng_(make_stream(seed, {kHaarTag, static_cast<std::uint64_t>(d), stream})) {
  if (d < 1) throw StructuralError("HaarSampler: d must be at least 1");
}

ScatteringMatrix HaarSampler::next() {
  ++count_;
  return ScatteringMatrix(haar_unitary(2 * d_, rng_));
}

std::vector<double> pmax_edges(int d, std::size_t bulk_bins, std::size_t tail_bins) {
  if (bulk_bins == 0 || tail_bins == 0) throw StructuralError("pmax_edges: bin counts must be positive");
  const double scale = std::sqrt(static_cast<double>(d));
  const auto nb = static_cast<double>(bulk_bins), nt = static_cast<double>(tail_bins);
  std::vector<double> e;
  for (std::size_t i = 0; i < bulk_bins; ++i) e.push_back(scale * kBulkTop * static_cast<double>(i) / nb);
  for (std::size_t i = 0; i <= tail_bins; ++i) {
    e.push_back(scale * kBulkTop * std::pow(kTailTop / kBulkTop, static_cast<double>(i) / nt));
  }
  return e;
}

std::string_view to_string(MeasureSet s) {
  switch (s) {
    case MeasureSet::ballistic:
      return "ballistic";
    case MeasureSet::localised:
      return "localised";
    case MeasureSet::totally_localised:
      return "totally_localised";
  }
  return "unknown";
}

std::string_view set_id(MeasureSet s) {
  switch (s) {
    case MeasureSet::ballistic:
      return "M_b";
    case MeasureSet::localised:
      return "M_l";
    case MeasureSet::totally_localised:
      return "M_l_star";
  }
  return "unknown";
}

std::uint64_t HaarSurvey::hits(MeasureSet s) const {
  switch (s) {
    case MeasureSet::ballistic:
      return du_counts.front();
    case MeasureSet::localised:
      return samples - du_counts.front();
    case MeasureSet::totally_localised:
      return du_counts.back();
  }
  return 0;
}

void HaarSurvey::merge(const HaarSurvey& o) {
  if (o.d != d) throw StructuralError("HaarSurvey::merge: channel mismatch");
  samples += o.samples;
  redraws += o.redraws;
  near_marginal += o.near_marginal;
  for (std::size_t i = 0; i < du_counts.size(); ++i) du_counts[i] += o.du_counts[i];
  pmax.merge(o.pmax);
  log_max_modulus.insert(log_max_modulus.end(), o.log_max_modulus.begin(), o.log_max_modulus.end());
}

HaarSurvey survey_chunks(int d, std::uint64_t first_chunk, std::uint64_t chunks, const SurveyOptions& options) {
  return run_chunks(d, first_chunk, chunks, kSurveyChunk, options);
}

HaarSurvey survey(int d, std::uint64_t n_samples, const SurveyOptions& options) {
  const std::uint64_t chunks = (n_samples + kSurveyChunk - 1) / kSurveyChunk;
  const std::uint64_t last = n_samples - (chunks == 0 ? 0 : (chunks - 1) * kSurveyChunk);
  return run_chunks(d, 0, chunks, last, options);
}

MeasureEstimate measure_from_survey(const HaarSurvey& s, MeasureSet set) {
  MeasureEstimate m;
  m.set = set;
  m.d = s.d;
  m.n_samples = s.samples;
  m.hits = s.hits(set);
  m.estimate = s.samples ? static_cast<double>(m.hits) / static_cast<double>(s.samples) : 0.0;
  std::tie(m.ci_lo, m.ci_hi) = wilson_interval(m.hits, s.samples);
  m.redraws = s.redraws;
  m.near_marginal = s.near_marginal;
  return m;
}

MeasureEstimate measure_estimate(int d, MeasureSet set, std::uint64_t n_samples, const SurveyOptions& options) {
  if (n_samples < 1000) throw StructuralError("measure_estimate: need at least 1000 samples");
  return measure_from_survey(survey(d, n_samples, options), set);
}

AdaptiveSurvey adaptive_survey(int d, std::span<const MeasureSet> sets, const AdaptiveOptions& adaptive,
                               const SurveyOptions& options) {
  const std::uint64_t cap_chunks = std::max<std::uint64_t>(1, adaptive.cap / kSurveyChunk);
  std::uint64_t done = std::clamp<std::uint64_t>((adaptive.initial + kSurveyChunk - 1) / kSurveyChunk, 1, cap_chunks);
  AdaptiveSurvey a{survey_chunks(d, 0, done, options), false};
  for (;;) {
    const bool precise = std::all_of(sets.begin(), sets.end(), [&](MeasureSet set) {
      const MeasureEstimate m = measure_from_survey(a.survey, set);
      return m.hits > 0 && (m.ci_hi - m.ci_lo) <= adaptive.relative_width * m.estimate;
    });
    if (precise) return a;
    if (done >= cap_chunks) {
      a.capped = true;
      return a;
    }
    const std::uint64_t more = std::min(done, cap_chunks - done);
    a.survey.merge(survey_chunks(d, done, more, options));
    done += more;
  }
}

MeasureEstimate adaptive_measure(int d, MeasureSet set, const AdaptiveOptions& adaptive, const SurveyOptions& options) {
  const MeasureSet sets[] = {set};
  const AdaptiveSurvey a = adaptive_survey(d, sets, adaptive, options);
  MeasureEstimate m = measure_from_survey(a.survey, set);
  m.capped = a.capped;
  return m;
}

std::string measure_csv(std::span<const MeasureEstimate> rows, const std::string& comment) {
  std::ostringstream os;
  if (!comment.empty()) os << comment << '\n';
  os << "d,set,n_samples,hits,estimate,ci_lo,ci_hi\n";
  for (const MeasureEstimate& m : rows) {
    os << m.d << ',' << set_id(m.set) << ',' << m.n_samples << ',' << m.hits << ',' << format_double(m.estimate)
       << ',' << format_double(m.ci_lo) << ',' << format_double(m.ci_hi) << '\n';
  }
  return os.str();
}

EnsembleStats pmax_distribution(int d, std::uint64_t n_samples, const SurveyOptions& options) {
  if (n_samples < 10000) throw StructuralError("pmax_distribution: need at least 10^4 samples");
  return survey(d, n_samples, options).pmax;
}

EnsembleStats pu_from_survey(const HaarSurvey& s) {
  std::vector<double> edges;
  for (int k = 0; k <= s.d + 1; ++k) edges.push_back((k - 0.5) / s.d);
  EnsembleStats pu{Histogram(std::move(edges))};
  for (std::size_t k = 0; k < s.du_counts.size(); ++k) {
    const double t = static_cast<double>(k) / s.d;
    for (std::uint64_t c = 0; c < s.du_counts[k]; ++c) pu.add(t);
  }
  return pu;
}

EnsembleStats pu_distribution(int d, std::uint64_t n_samples, const SurveyOptions& options) {
  if (n_samples < 10000) throw StructuralError("pu_distribution: need at least 10^4 samples");
  return pu_from_survey(survey(d, n_samples, options));
}

double scaled_density(const EnsembleStats& h, int d, std::size_t i) {
  return std::sqrt(static_cast<double>(d)) * h.density(i);
}

CollapseReport scaling_collapse(std::span<const std::pair<int, EnsembleStats>> histograms) {
  CollapseReport r;
  std::vector<const std::pair<int, EnsembleStats>*> used;
  std::vector<double> grid;
  auto scaled_edges = [](const std::pair<int, EnsembleStats>& h) {
    std::vector<double> e = h.second.histogram.edges();
    const double s = std::sqrt(static_cast<double>(h.first));
    for (double& x : e) x /= s;
    return e;
  };
  for (const auto& h : histograms) {
    if (h.first == 1) {
      r.notes.push_back("d=1 excluded: the scaling form does not hold for a single channel");
      continue;
    }
    if (h.first < 1) throw StructuralError("scaling_collapse: d must be positive");
    const std::vector<double> e = scaled_edges(h);
    if (grid.empty()) grid = e;
    const bool same = e.size() == grid.size() &&
                      std::equal(e.begin(), e.end(), grid.begin(), [](double a, double b) {
                        return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
                      });
    if (!same) {
      r.notes.push_back("d=" + std::to_string(h.first) + " not on the common scaled grid; excluded (coverage)");
      continue;
    }
    used.push_back(&h);
  }
  std::sort(used.begin(), used.end(), [](auto* a, auto* b) { return a->first < b->first; });
  if (used.size() < 2) throw StructuralError("scaling_collapse: need at least two values of d >= 2");

  std::size_t bulk = 0;
  while (bulk + 1 < grid.size() && grid[bulk + 1] <= kBulkTop * (1.0 + 1e-12)) ++bulk;
  for (const auto* h : used) {
    r.d.push_back(h->first);
    const auto& hist = h->second.histogram;
    r.tails.push_back(fit_power_tail(hist.edges(), hist.counts(), h->second.total(), kTailFitLo, kTailFitHi,
                                     std::sqrt(static_cast<double>(h->first))));
  }
  for (std::size_t k = 0; k + 1 < used.size(); ++k) {
    double sup = 0.0;
    for (std::size_t i = 0; i < bulk; ++i) {
      sup = std::max(sup, std::abs(scaled_density(used[k]->second, used[k]->first, i) -
                                   scaled_density(used[k + 1]->second, used[k + 1]->first, i)));
    }
    r.pairs.emplace_back(used[k]->first, used[k + 1]->first);
    r.sup_distance.push_back(sup);
  }
  r.amplitude = r.tails.back().amplitude3;
  r.amplitude_stderr = r.tails.back().amplitude3_stderr;
  return r;
}

std::string CollapseReport::json() const {
  std::ostringstream os;
  os << "{\"d\":[";
  for (std::size_t i = 0; i < d.size(); ++i) os << (i ? "," : "") << d[i];
  os << "],\"pairs\":[";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    os << (i ? "," : "") << "{\"d1\":" << pairs[i].first << ",\"d2\":" << pairs[i].second
       << ",\"sup_distance\":" << format_double(sup_distance[i]) << '}';
  }
  os << "],\"tails\":[";
  for (std::size_t i = 0; i < tails.size(); ++i) {
    const TailFit& t = tails[i];
    os << (i ? "," : "") << "{\"d\":" << d[i] << ",\"lo\":" << format_double(t.lo) << ",\"hi\":" << format_double(t.hi)
       << ",\"count\":" << t.count << ",\"exponent\":" << format_double(-t.exponent)
       << ",\"exponent_stderr\":" << format_double(t.exponent_stderr) << ",\"amplitude\":" << format_double(t.amplitude3)
       << ",\"amplitude_stderr\":" << format_double(t.amplitude3_stderr) << '}';
  }
  os << "],\"amplitude\":" << format_double(amplitude) << ",\"amplitude_stderr\":" << format_double(amplitude_stderr)
     << ",\"notes\":[";
  for (std::size_t i = 0; i < notes.size(); ++i) os << (i ? "," : "") << '"' << notes[i] << '"';
  os << "]}";
  return os.str();
}

}  // namespace chainscat
