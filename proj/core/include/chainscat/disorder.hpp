#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chainscat/random.hpp"
#include "chainscat/single_channel.hpp"
#include "chainscat/statistics.hpp"

namespace chainscat {

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
/// Used instead of std::uniform_real_distribution so streams are identical
/// across standard library implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Distribution {
  enum class Kind { constant, uniform };
  Kind kind = Kind::constant;
  double lo = 0.0;
  double hi = 0.0;

  static Distribution constant(double v) { return {Kind::constant, v, v}; }
  static Distribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }

  /// Consumes one engine draw for uniform, none for constant.
  double sample(Rng& rng) const { return kind == Kind::constant ? lo : lo + (hi - lo) * uniform01(rng); }
};

/// Independent per-site distributions of the single-channel generator.
///
/// The amplitude is given either as A or as B. beta_L = beta_R = lambda.
/// Sampled phases are reduced to [0, 2pi). Draw order per site: amplitude,
/// lambda, alpha_L.
struct DisorderModel {
  enum class Amplitude { A, B };
  Amplitude amplitude = Amplitude::B;
  Distribution amp = Distribution::uniform(0.0, 1.0);
  Distribution lambda = Distribution::constant(0.0);
  Distribution alpha_L = Distribution::uniform(0.0, kTwoPi);
  std::uint64_t seed = 0;

  SingleChannelParams sample(Rng& rng) const;
  /// B(n) is identically zero.
  bool degenerate() const;
  /// No disorder at all (every distribution constant).
  bool is_static() const;
};

/// Parse {"A"|"B": {...}, "lambda": {...}, "alpha_L": {...}, "seed": int}.
/// Each distribution is {"dist": "const", "value": v} or
/// {"dist": "uniform", "lo": a, "hi": b} ("const" also accepts lo).
/// Errors are ConfigError with a JSON-pointer style path under `path`.
DisorderModel parse_disorder_model(std::string_view json_text, const std::string& path = "");
/// Canonical JSON; parse_disorder_model(disorder_model_json(m)) == m.
std::string disorder_model_json(const DisorderModel& m);

bool operator==(const Distribution& a, const Distribution& b);
bool operator==(const DisorderModel& a, const DisorderModel& b);

struct DecayRateOptions {
  bool approximate = false;
  unsigned workers = 1;
  std::size_t bins = 50;
  /// Histogram range; lo >= hi means min/max of the finite samples.
  double range_lo = 0.0;
  double range_hi = 0.0;
};

struct DecayRateSeries {
  std::int64_t n = 0;
  std::vector<double> log_B;  ///< per chain
  std::vector<double> I;      ///< per chain, log_B / n
  EnsembleStats stats;
  bool degenerate = false;
  std::vector<std::string> warnings;

  /// Rows "n,chain_id,B_n,I_n" with a header line.
  std::string csv(const std::string& comment = {}) const;
};

/// Ensemble of independent chains of length n. Chain i draws its generators
/// from make_stream(model.seed, {tag, i}); S_1 is the first drawn generator.
DecayRateSeries decay_rate_series(const DisorderModel& model, std::int64_t n, std::size_t ensemble,
                                  const DecayRateOptions& options = {});

struct GaussianPrediction {
  double mean = 0.0;
  double variance = 0.0;
  double mean_stderr = 0.0;
  double variance_stderr = 0.0;
  double chain_mean[2] = {0.0, 0.0};
  double chain_variance[2] = {0.0, 0.0};
  bool converged = false;

  /// Density of I_n at length n.
  double density(double I, std::int64_t n) const;
  double cdf(double I, std::int64_t n) const;
};

/// Stationary moments of log f(B, phi + alpha) from two independent phi
/// chains of the strong-disorder map, each burnt in for `burn_in` steps and
/// then sampled `samples / 2` times. `converged` is false when the chains
/// disagree by more than three combined standard errors.
GaussianPrediction gaussian_prediction(const DisorderModel& model, std::size_t burn_in = 1000,
                                       std::size_t samples = 100000);

}  // namespace chainscat
