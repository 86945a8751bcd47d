#include "chainscat/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "chainscat/error.hpp"
#include "chainscat/matrix_io.hpp"
#include "chainscat/parallel.hpp"

namespace chainscat {
namespace {

using nlohmann::json;

constexpr std::uint64_t kDecayTag = 0xdeca1;
constexpr std::uint64_t kPhiChainTag = 0xf1c4a;
constexpr std::size_t kChainsPerTask = 128;

double number_at(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "/" + key, "missing");
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + "/" + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path + "/" + key, "not finite");
  return x;
}

Distribution parse_distribution(const json& j, const std::string& path, double lo_bound, double hi_bound) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (!j.contains("dist") || !j.at("dist").is_string()) throw ConfigError(path + "/dist", "expected \"const\" or \"uniform\"");
  const std::string kind = j.at("dist").get<std::string>();
  Distribution d;
  if (kind == "const") {
    const double v = number_at(j, j.contains("value") ? "value" : "lo", path);
    d = Distribution::constant(v);
  } else if (kind == "uniform") {
    d = Distribution::uniform(number_at(j, "lo", path), number_at(j, "hi", path));
    if (d.lo > d.hi) throw ConfigError(path, "lo exceeds hi");
  } else {
    throw ConfigError(path + "/dist", "unknown distribution \"" + kind + "\"");
  }
  if (d.lo < lo_bound || d.hi > hi_bound) {
    throw ConfigError(path, "range must lie in [" + format_double(lo_bound) + ", " + format_double(hi_bound) + "]");
  }
  return d;
}

json distribution_json(const Distribution& d) {
  if (d.kind == Distribution::Kind::constant) return json{{"dist", "const"}, {"value", d.lo}};
  return json{{"dist", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
}

ChainState1D run_chain(const DisorderModel& model, std::int64_t n, std::uint64_t chain, bool approximate) {
  Rng rng = make_stream(model.seed, {kDecayTag, chain});
  ChainState1D s = ChainState1D::single(model.sample(rng));
  for (std::int64_t k = 1; k < n; ++k) {
    const SingleChannelParams g = model.sample(rng);
    s = approximate ? approximate_step(s, g) : noisy_step(s, g);
  }
  return s;
}

struct PhiChain {
  std::vector<double> values;
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
};

PhiChain sample_phi_chain(const DisorderModel& model, std::uint64_t chain, std::size_t burn_in, std::size_t samples) {
  Rng rng = make_stream(model.seed, {kPhiChainTag, chain});
  double phi = kTwoPi * uniform01(rng);
  auto advance = [&](const SingleChannelParams& g) {
    phi = wrap_positive(phi + 2.0 * g.lambda() + 2.0 * std::arg(1.0 + g.A * std::polar(1.0, -(phi + g.alpha_L))));
  };
  for (std::size_t k = 0; k < burn_in; ++k) advance(model.sample(rng));

  PhiChain out;
  out.values.reserve(samples);
  Moments m;
  for (std::size_t k = 0; k < samples; ++k) {
    const SingleChannelParams g = model.sample(rng);
    const double x = log_transmission_factor(g.B, phi + g.alpha_L);
    out.values.push_back(x);
    m.add(x);
    advance(g);
  }
  out.mean = m.mean;
  out.variance = m.variance();
  out.mean_se = batch_means_stderr(out.values);
  std::vector<double> sq(out.values.size());
  std::transform(out.values.begin(), out.values.end(), sq.begin(),
                 [&](double x) { return (x - m.mean) * (x - m.mean); });
  out.variance_se = batch_means_stderr(sq);
  return out;
}

}  // namespace

SingleChannelParams DisorderModel::sample(Rng& rng) const {
  const double a = amp.sample(rng);
  const double l = wrap_positive(lambda.sample(rng));
  const double al = wrap_positive(alpha_L.sample(rng));
  return amplitude == Amplitude::A ? SingleChannelParams::from_lambda(a, l, al)
                                   : SingleChannelParams::from_transmission(a, l, al);
}

bool DisorderModel::degenerate() const {
  if (amp.kind != Distribution::Kind::constant) return false;
  return amplitude == Amplitude::A ? amp.lo == 1.0 : amp.lo == 0.0;
}

bool DisorderModel::is_static() const {
  return amp.kind == Distribution::Kind::constant && lambda.kind == Distribution::Kind::constant &&
         alpha_L.kind == Distribution::Kind::constant;
}

bool operator==(const Distribution& a, const Distribution& b) {
  return a.kind == b.kind && a.lo == b.lo && a.hi == b.hi;
}

bool operator==(const DisorderModel& a, const DisorderModel& b) {
  return a.amplitude == b.amplitude && a.amp == b.amp && a.lambda == b.lambda && a.alpha_L == b.alpha_L &&
         a.seed == b.seed;
}

DisorderModel parse_disorder_model(std::string_view text, const std::string& path) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.empty() ? "/" : path, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  DisorderModel m;
  const bool has_a = j.contains("A"), has_b = j.contains("B");
  if (has_a == has_b) throw ConfigError(path + "/A", "exactly one of \"A\" and \"B\" is required");
  m.amplitude = has_a ? DisorderModel::Amplitude::A : DisorderModel::Amplitude::B;
  const char* amp_key = has_a ? "A" : "B";
  m.amp = parse_distribution(j.at(amp_key), path + "/" + amp_key, 0.0, 1.0);
  const double inf = std::numeric_limits<double>::infinity();
  if (!j.contains("lambda")) throw ConfigError(path + "/lambda", "missing");
  m.lambda = parse_distribution(j.at("lambda"), path + "/lambda", -inf, inf);
  if (j.contains("alpha_L")) m.alpha_L = parse_distribution(j.at("alpha_L"), path + "/alpha_L", -inf, inf);
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      throw ConfigError(path + "/seed", "expected a non-negative integer");
    }
    m.seed = s.get<std::uint64_t>();
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "A" && key != "B" && key != "lambda" && key != "alpha_L" && key != "seed") {
      throw ConfigError(path + "/" + key, "unknown field");
    }
  }
  return m;
}

std::string disorder_model_json(const DisorderModel& m) {
  json j;
  j[m.amplitude == DisorderModel::Amplitude::A ? "A" : "B"] = distribution_json(m.amp);
  j["lambda"] = distribution_json(m.lambda);
  j["alpha_L"] = distribution_json(m.alpha_L);
  j["seed"] = m.seed;
  return j.dump();
}

std::string DecayRateSeries::csv(const std::string& comment) const {
  std::ostringstream os;
  if (!comment.empty()) os << comment << '\n';
  os << "n,chain_id,B_n,I_n\n";
  for (std::size_t i = 0; i < I.size(); ++i) {
    os << n << ',' << i << ',' << format_double(std::exp(log_B[i])) << ',' << format_double(I[i]) << '\n';
  }
  return os.str();
}

DecayRateSeries decay_rate_series(const DisorderModel& model, std::int64_t n, std::size_t ensemble,
                                  const DecayRateOptions& options) {
  if (n < 1) throw StructuralError("decay_rate_series: n must be at least 1");
  if (ensemble < 1) throw StructuralError("decay_rate_series: ensemble must be at least 1");
  if (options.bins == 0) throw StructuralError("decay_rate_series: bins must be positive");

  DecayRateSeries out;
  out.n = n;
  out.degenerate = model.degenerate();
  if (n < 50) out.warnings.push_back("n = " + std::to_string(n) + " is short; the Gaussian law needs n >> 1");
  if (ensemble == 1) out.warnings.push_back("ensemble of one chain; no distributional statistics");
  if (out.degenerate) out.warnings.push_back("degenerate model: B(n) = 0, all mass at I = -inf");

  out.log_B.assign(ensemble, 0.0);
  out.I.assign(ensemble, 0.0);
  const ChunkPlan plan{ensemble, kChainsPerTask};
  parallel_tasks(plan.count(), options.workers, [&](std::size_t task) {
    for (std::size_t i = plan.begin(task); i < plan.end(task); ++i) {
      const ChainState1D s = run_chain(model, n, i, options.approximate);
      out.log_B[i] = s.log_B;
      out.I[i] = s.log_B / static_cast<double>(n);
    }
  });

  double lo = options.range_lo, hi = options.range_hi;
  if (!(lo < hi)) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (double x : out.I) {
      if (std::isfinite(x)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    if (!(lo <= hi)) lo = hi = 0.0;
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      // Nudge the top edge so the maximum lands inside the last bin.
      hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
    }
  }
  out.stats = EnsembleStats(Histogram::linear(lo, hi, options.bins));
  for (double x : out.I) out.stats.add(x);
  return out;
}

double GaussianPrediction::density(double I, std::int64_t n) const {
  const double v = variance / static_cast<double>(n);
  return std::exp(-0.5 * (I - mean) * (I - mean) / v) / std::sqrt(kTwoPi * v);
}

double GaussianPrediction::cdf(double I, std::int64_t n) const {
  return normal_cdf(I, mean, std::sqrt(variance / static_cast<double>(n)));
}

GaussianPrediction gaussian_prediction(const DisorderModel& model, std::size_t burn_in, std::size_t samples) {
  if (samples < 2) throw StructuralError("gaussian_prediction: need at least two samples");
  if (model.degenerate()) throw DegenerateTransferError("gaussian_prediction: degenerate model (B = 0)");
  const std::size_t half = samples / 2;
  const PhiChain a = sample_phi_chain(model, 0, burn_in, half);
  const PhiChain b = sample_phi_chain(model, 1, burn_in, samples - half);

  GaussianPrediction p;
  Moments all;
  for (double x : a.values) all.add(x);
  for (double x : b.values) all.add(x);
  p.mean = all.mean;
  p.variance = all.variance();
  p.chain_mean[0] = a.mean;
  p.chain_mean[1] = b.mean;
  p.chain_variance[0] = a.variance;
  p.chain_variance[1] = b.variance;
  p.mean_stderr = 0.5 * std::hypot(a.mean_se, b.mean_se);
  p.variance_stderr = 0.5 * std::hypot(a.variance_se, b.variance_se);
  const bool means_agree = std::abs(a.mean - b.mean) <= 3.0 * std::hypot(a.mean_se, b.mean_se);
  const bool variances_agree = std::abs(a.variance - b.variance) <= 3.0 * std::hypot(a.variance_se, b.variance_se);
  p.converged = means_agree && variances_agree;
  return p;
}

}  // namespace chainscat
