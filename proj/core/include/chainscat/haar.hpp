#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chainscat/multi_channel.hpp"
#include "chainscat/random.hpp"
#include "chainscat/scaling_fit.hpp"
#include "chainscat/statistics.hpp"

namespace chainscat {

/// Haar-distributed scattering matrices on U(2d): complex Ginibre matrix,
/// Householder QR, columns rescaled by the phases of diag(R).
/// Each complex Gaussian entry is one Box-Muller pair on 53-bit uniforms, so
/// the sequence depends only on (d, seed, stream), not on the standard library.
class HaarSampler {
 public:
  HaarSampler(int d, std::uint64_t seed, std::uint64_t stream = 0);

  ScatteringMatrix next();
  int channels() const noexcept { return d_; }
  std::uint64_t count() const noexcept { return count_; }

 private:
  int d_;
  Rng rng_;
  std::uint64_t count_ = 0;
};

/// Uniform unitary of size n (the sampler's generator, exposed for tests).
CMatrix haar_unitary(int n, Rng& rng);

/// Edges of the P_max histogram in raw units t = max|kappa|: a grid common to
/// all d in the scaled variable t / sqrt(d), linear on [0, 4) and
/// logarithmic on [4, 64], multiplied by sqrt(d).
std::vector<double> pmax_edges(int d, std::size_t bulk_bins = 20, std::size_t tail_bins = 24);

enum class MeasureSet { ballistic, localised, totally_localised };
std::string_view to_string(MeasureSet s);
/// "M_b", "M_l", "M_l_star"
std::string_view set_id(MeasureSet s);

/// Tallies of one spectral pass over Haar samples.
struct HaarSurvey {
  int d = 0;
  std::uint64_t samples = 0;
  /// draws discarded because s_to_t failed (singular t^R)
  std::uint64_t redraws = 0;
  /// samples classified ballistic although an eigenvalue sits inside the
  /// unit-circle band but farther than 1e-3 tol from it (band decided them)
  std::uint64_t near_marginal = 0;
  std::vector<std::uint64_t> du_counts;  ///< index d_u, size d + 1
  EnsembleStats pmax;                     ///< max|kappa| with the ballistic point mass at 1
  std::vector<double> log_max_modulus;    ///< only when requested

  std::uint64_t hits(MeasureSet s) const;
  void merge(const HaarSurvey& other);
};

struct SurveyOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool keep_values = false;
  double tol = tolerance::kSpectral;
  std::size_t bulk_bins = 20;  ///< P_max grid, see pmax_edges()
  std::size_t tail_bins = 24;
};

/// Samples per deterministic work unit; chunk c of dimension d draws from
/// HaarSampler(d, seed, c).
inline constexpr std::uint64_t kSurveyChunk = 1000;

/// Survey `chunks` whole chunks starting at chunk index `first_chunk`.
HaarSurvey survey_chunks(int d, std::uint64_t first_chunk, std::uint64_t chunks, const SurveyOptions& options);
/// Survey ceil(n_samples / kSurveyChunk) chunks from chunk 0; the last chunk
/// is truncated so exactly n_samples are drawn.
HaarSurvey survey(int d, std::uint64_t n_samples, const SurveyOptions& options);

struct MeasureEstimate {
  MeasureSet set = MeasureSet::ballistic;
  int d = 0;
  std::uint64_t n_samples = 0;
  std::uint64_t hits = 0;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::uint64_t redraws = 0;
  std::uint64_t near_marginal = 0;
  /// adaptive sampling hit the cap before reaching the target precision;
  /// ci_hi is then the reported upper bound
  bool capped = false;

  MeasurePoint point() const { return {d, hits, n_samples}; }
};

MeasureEstimate measure_from_survey(const HaarSurvey& s, MeasureSet set);
/// Plain Monte Carlo estimate with n_samples >= 1000.
MeasureEstimate measure_estimate(int d, MeasureSet set, std::uint64_t n_samples, const SurveyOptions& options);

struct AdaptiveOptions {
  std::uint64_t initial = 100000;
  std::uint64_t cap = 10000000;
  /// target (ci_hi - ci_lo) / estimate
  double relative_width = 0.2;
};

struct AdaptiveSurvey {
  HaarSurvey survey;
  /// the cap was reached before every requested set met the target
  bool capped = false;
};

/// Doubles the sample count (whole chunks, always extending the same
/// deterministic stream of chunks) until the Wilson interval of every set in
/// `sets` is narrow enough or the cap is reached.
AdaptiveSurvey adaptive_survey(int d, std::span<const MeasureSet> sets, const AdaptiveOptions& adaptive,
                               const SurveyOptions& options);

/// adaptive_survey() for a single set. Doubles the sample count (whole chunks, always extending the same
/// deterministic stream of chunks) until the Wilson interval is narrow
/// enough or the cap is reached.
MeasureEstimate adaptive_measure(int d, MeasureSet set, const AdaptiveOptions& adaptive, const SurveyOptions& options);

/// "d,set,n_samples,hits,estimate,ci_lo,ci_hi" rows with a header line.
std::string measure_csv(std::span<const MeasureEstimate> rows, const std::string& comment = {});

/// P_max(t; d) histogram on pmax_edges(d); requires n_samples >= 10^4.
EnsembleStats pmax_distribution(int d, std::uint64_t n_samples, const SurveyOptions& options);

/// Discrete distribution of d_u / d on {0, 1/d, .., 1} (bins centred on the
/// grid points, so density * width is the probability).
EnsembleStats pu_from_survey(const HaarSurvey& s);
EnsembleStats pu_distribution(int d, std::uint64_t n_samples, const SurveyOptions& options);

struct CollapseReport {
  std::vector<int> d;                 ///< values used, ascending
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> sup_distance;   ///< over the linear bulk of the scaled grid
  std::vector<TailFit> tails;         ///< per d, scaled window [4, 16]
  double amplitude = 0.0;             ///< a at the largest d
  double amplitude_stderr = 0.0;
  std::vector<std::string> notes;

  std::string json() const;
};

/// Rescale t -> t / sqrt(d), density -> sqrt(d) density and compare
/// consecutive d over the linear bulk. All histograms must share one scaled
/// grid; others are excluded with a coverage note, as is d = 1.
CollapseReport scaling_collapse(std::span<const std::pair<int, EnsembleStats>> histograms);

/// Scaled density sqrt(d) P_max(sqrt(d) s; d) in bin i of pmax_edges(d).
double scaled_density(const EnsembleStats& h, int d, std::size_t i);

}  // namespace chainscat
