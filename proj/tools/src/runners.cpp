#include "chainscat_cli/runners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "chainscat/disorder.hpp"
#include "chainscat/error.hpp"
#include "chainscat/haar.hpp"
#include "chainscat/matrix_io.hpp"
#include "chainscat/multi_channel.hpp"
#include "chainscat/scaling_fit.hpp"
#include "chainscat/single_channel.hpp"

namespace chainscat::cli {
namespace {

constexpr std::uint64_t kPortraitTag = 0x9047;

std::string fmt(double x) { return format_double(x); }

CheckLine check_line(std::string name, bool pass, std::string detail) {
  return {std::move(name), pass, std::move(detail)};
}

// Optional acceptance thresholds under params.check.
const json& check_spec(const json& params) {
  static const json empty = json::object();
  if (!params.contains("check")) return empty;
  if (!params.at("check").is_object()) throw ConfigError("/params/check", "expected an object");
  return params.at("check");
}

std::vector<std::pair<double, double>> parse_initials(const json& params) {
  if (!params.contains("initial")) throw ConfigError("/params/initial", "missing");
  const json& list = params.at("initial");
  if (!list.is_array() || list.empty()) throw ConfigError("/params/initial", "expected a non-empty list of [A, chi]");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& p = list[i];
    const std::string path = "/params/initial/" + std::to_string(i);
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ConfigError(path, "expected [A, chi]");
    }
    const double a = p[0].get<double>();
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError(path + "/0", "A must lie in [0, 1]");
    out.emplace_back(a, p[1].get<double>());
  }
  return out;
}

DisorderModel model_param(const ExperimentConfig& c) {
  if (!c.params.contains("model")) throw ConfigError("/params/model", "missing");
  DisorderModel m = parse_disorder_model(c.params.at("model").dump(), "/params/model");
  // The run seed is the single source of randomness.
  m.seed = c.seed;
  return m;
}

double midpoint(const Distribution& d) { return 0.5 * (d.lo + d.hi); }

json fixed_point_json(const SingleChannelParams& gen) {
  json j{{"D", discriminant(gen)}};
  try {
    const FixedPointReport r = fixed_points(gen);
    j["kind"] = r.kind == FixedPointKind::elliptic ? "elliptic" : "attractor";
    j["A"] = r.A;
    j["chi"] = r.chi;
    j["contraction"] = r.contraction;
  } catch (const MarginalCaseError&) {
    j["kind"] = "marginal";
  }
  return j;
}

json spectrum_json(const SpectralClassification& s) { return json::parse(s.json()); }

std::vector<double> parse_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(path + "/" + std::to_string(i), "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

// Relative-tolerance check against an optional expected value in params.check.
void expect_relative(const json& spec, const char* key, const char* rel_key, double value, const std::string& name,
                     RunResult& r) {
  if (!spec.contains(key)) return;
  const double want = spec.at(key).get<double>();
  const double rel = spec.value(rel_key, 0.1);
  const double err = std::abs(value / want - 1.0);
  r.checks.push_back(check_line(name, err <= rel, fmt(value) + " vs " + fmt(want) + " (rel " + fmt(err) + " <= " +
                                                      fmt(rel) + ")"));
}

}  // namespace

bool RunResult::checks_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.pass; });
}

ArtifactWriter::ArtifactWriter(const ExperimentConfig& config)
    : dir_(config.out),
      header_(config.header()),
      provenance_{{"experiment", config.experiment}, {"config_hash", config.hash_hex()}, {"seed", config.seed}} {
  std::filesystem::create_directories(dir_);
}

void ArtifactWriter::csv(const std::string& name, const std::string& body, RunResult& result) const {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
  result.artifacts.push_back(path);
}

void ArtifactWriter::json_file(const std::string& name, const json& payload, RunResult& result) const {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << json{{"provenance", provenance_}, {"result", payload}}.dump(1) << '\n';
  result.artifacts.push_back(path);
}

ScatteringMatrix parse_generator(const json& spec, std::uint64_t seed, const std::string& path) {
  if (!spec.is_object() || !spec.contains("kind") || !spec.at("kind").is_string()) {
    throw ConfigError(path + "/kind", "expected one of single_channel, haar, matrix, file, identity");
  }
  const std::string kind = spec.at("kind").get<std::string>();
  auto num = [&](const char* key, std::optional<double> fallback = std::nullopt) {
    if (!spec.contains(key)) {
      if (fallback) return *fallback;
      throw ConfigError(path + "/" + key, "missing");
    }
    if (!spec.at(key).is_number()) throw ConfigError(path + "/" + key, "expected a number");
    return spec.at(key).get<double>();
  };
  auto channels = [&] {
    if (!spec.contains("d") || !spec.at("d").is_number_integer() || spec.at("d").get<int>() < 1 ||
        spec.at("d").get<int>() > 512) {
      throw ConfigError(path + "/d", "expected a channel count in [1, 512]");
    }
    return spec.at("d").get<int>();
  };
  if (kind == "single_channel") {
    const double a = num("A");
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError(path + "/A", "must lie in [0, 1]");
    return materialize(SingleChannelParams::from_lambda(a, num("lambda"), num("alpha_L", 0.0), num("delta", 0.0)));
  }
  if (kind == "identity") return ScatteringMatrix::identity(channels());
  if (kind == "matrix") {
    try {
      return parse_matrix_json(spec.dump()).matrix;
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
  }
  if (kind == "file") {
    if (!spec.contains("path") || !spec.at("path").is_string()) throw ConfigError(path + "/path", "expected a path");
    try {
      return read_matrix_file(spec.at("path").get<std::string>()).matrix;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(path + "/path", e.what());
    }
  }
  if (kind == "haar") {
    const int d = channels();
    std::optional<TransportClass> want;
    if (spec.contains("require")) {
      const std::string label = spec.at("require").is_string() ? spec.at("require").get<std::string>() : "";
      for (auto c : {TransportClass::ballistic, TransportClass::partially_localised, TransportClass::totally_localised}) {
        if (label == to_string(c)) want = c;
      }
      if (!want) throw ConfigError(path + "/require", "expected ballistic, partially_localised or totally_localised");
    }
    HaarSampler sampler(d, seed, 0);
    for (int k = 0; k < 1000000; ++k) {
      ScatteringMatrix s = sampler.next();
      if (!want) return s;
      try {
        const SpectralClassification c = classify(s);
        if (c.label == *want && !c.defective) return s;
      } catch (const SingularBlockError&) {
      }
    }
    throw Error("no Haar sample with the required label in 10^6 draws");
  }
  throw ConfigError(path + "/kind", "unknown generator kind \"" + kind + "\"");
}

RunResult run_portrait(const ExperimentConfig& c) {
  const json& p = c.params;
  const double a = param_number(p, "A");
  if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("/params/A", "must lie in [0, 1]");
  const SingleChannelParams gen = SingleChannelParams::from_lambda(a, param_number(p, "lambda"),
                                                                   param_number(p, "alpha_L", 0.0),
                                                                   param_number(p, "delta", 0.0));
  const std::int64_t steps = param_int(p, "steps", 2000, 1);
  const auto initials = parse_initials(p);

  RunResult r;
  ArtifactWriter w(c);
  const double D = discriminant(gen);
  const json fp = fixed_point_json(gen);

  std::ostringstream os;
  os << w.header() << "\nic,n,A_n,chi_n\n";
  double max_f_drift = 0.0, max_a = 0.0, worst_a_end = 1.0, worst_chi_end = 0.0;
  for (std::size_t ic = 0; ic < initials.size(); ++ic) {
    ChainState1D s = ChainState1D::from_static(initials[ic].first, initials[ic].second, gen);
    const bool has_f = s.A < 1.0;
    const double f1 = has_f ? integral_F(s, gen) : 0.0;
    for (std::int64_t n = 0; n < steps; ++n) {
      if (n > 0) s = static_step(s, gen);
      os << ic << ',' << n + 1 << ',' << fmt(s.A) << ',' << fmt(wrap_phase(s.chi(gen))) << '\n';
      if (has_f && s.A < 1.0) max_f_drift = std::max(max_f_drift, std::abs(integral_F(s, gen) - f1));
      max_a = std::max(max_a, s.A);
    }
    worst_a_end = std::min(worst_a_end, s.A);
    if (fp.value("kind", "") == "attractor") {
      worst_chi_end = std::max(worst_chi_end, std::abs(wrap_phase(s.chi(gen) - fp.at("chi").get<double>())));
    }
  }
  w.csv("orbits.csv", os.str(), r);
  w.json_file("fixed_point.json", fp, r);

  if (D < 0.0) {
    r.checks.push_back(check_line("portrait.integral_conserved", max_f_drift < 1e-10, "max|F_n - F_1| = " + fmt(max_f_drift)));
    r.checks.push_back(check_line("portrait.bounded", max_a < 1.0, "max A_n = " + fmt(max_a)));
  } else if (fp.value("kind", "") == "attractor") {
    r.checks.push_back(check_line("portrait.converges_to_attractor", worst_a_end > 1.0 - 1e-9 && worst_chi_end < 1e-6,
                                  "min final A = " + fmt(worst_a_end) + ", max |chi - chi_a| = " + fmt(worst_chi_end)));
  }
  return r;
}

RunResult run_noisy_portrait(const ExperimentConfig& c) {
  const json& p = c.params;
  const DisorderModel model = model_param(c);
  const std::int64_t steps = param_int(p, "steps", 10000, 1);
  const auto initials = parse_initials(p);
  const double band_factor = param_number(p, "band_factor", 5.0);
  if (model.amplitude != DisorderModel::Amplitude::A) throw ConfigError("/params/model/A", "noisy-portrait needs an A distribution");
  const SingleChannelParams nominal =
      SingleChannelParams::from_lambda(midpoint(model.amp), midpoint(model.lambda), midpoint(model.alpha_L));
  const double eps = std::max({0.5 * (model.amp.hi - model.amp.lo), 0.5 * (model.lambda.hi - model.lambda.lo),
                               0.5 * (model.alpha_L.hi - model.alpha_L.lo)});

  RunResult r;
  ArtifactWriter w(c);
  std::ostringstream os;
  os << w.header() << "\nic,n,A_n,chi_n,B_n\n";
  double max_dev = 0.0, min_b = 1.0;
  for (std::size_t ic = 0; ic < initials.size(); ++ic) {
    Rng rng = make_stream(model.seed, {kPortraitTag, ic});
    ChainState1D s = ChainState1D::from_static(initials[ic].first, initials[ic].second, nominal);
    const double f1 = s.A < 1.0 ? integral_F(s, nominal) : 0.0;
    for (std::int64_t n = 0; n < steps; ++n) {
      if (n > 0) s = noisy_step(s, model.sample(rng));
      os << ic << ',' << n + 1 << ',' << fmt(s.A) << ',' << fmt(wrap_phase(s.chi(nominal))) << ',' << fmt(s.B) << '\n';
      if (s.A < 1.0) max_dev = std::max(max_dev, std::abs(integral_F(s, nominal) - f1));
      min_b = std::min(min_b, s.B);
    }
  }
  w.csv("orbits.csv", os.str(), r);
  w.json_file("fixed_point.json", fixed_point_json(nominal), r);
  if (discriminant(nominal) < 0.0 && eps > 0.0) {
    // Independent kicks make F_n a random walk: the band widens as eps sqrt(n).
    const double band = band_factor * eps * std::sqrt(static_cast<double>(steps));
    r.checks.push_back(check_line("noisy_portrait.level_set_band", max_dev <= band,
                                  "max|F_n - F_1| = " + fmt(max_dev) + " <= " + fmt(band_factor) +
                                      " eps sqrt(n) = " + fmt(band)));
    r.checks.push_back(check_line("noisy_portrait.no_localisation", min_b > 0.0, "min B_n = " + fmt(min_b)));
  }
  return r;
}

RunResult run_decay_hist(const ExperimentConfig& c) {
  const json& p = c.params;
  const DisorderModel model = model_param(c);
  const std::int64_t n = param_int(p, "n", 100, 1);
  const auto ensemble = static_cast<std::size_t>(param_int(p, "ensemble", 10000, 1));
  DecayRateOptions opt;
  opt.approximate = param_bool(p, "approximate", false);
  opt.workers = c.parallel;
  opt.bins = static_cast<std::size_t>(param_int(p, "bins", 50, 1));
  if (p.contains("range")) {
    const auto range = parse_numbers(p.at("range"), "/params/range");
    if (range.size() != 2 || !(range[0] < range[1])) throw ConfigError("/params/range", "expected [lo, hi] with lo < hi");
    opt.range_lo = range[0];
    opt.range_hi = range[1];
  }
  const auto burn_in = static_cast<std::size_t>(param_int(p, "burn_in", 1000, 0));
  const auto samples = static_cast<std::size_t>(param_int(p, "samples", 100000, 2));

  RunResult r;
  ArtifactWriter w(c);
  const DecayRateSeries series = decay_rate_series(model, n, ensemble, opt);
  for (const auto& warning : series.warnings) r.notices.push_back(warning);
  w.csv("decay_samples.csv", series.csv(w.header()), r);
  w.csv("decay_hist.csv", series.stats.histogram_csv(w.header()), r);

  const Moments& m = series.stats.moments;
  json report{{"n", n},
              {"ensemble", ensemble},
              {"approximate", opt.approximate},
              {"mean", m.mean},
              {"mean_stderr", m.stderr_mean()},
              {"sigma2", static_cast<double>(n) * m.variance()},
              {"skewness", m.skewness()},
              {"skewness_stderr", m.skewness_stderr()},
              {"non_finite", series.stats.non_finite},
              {"degenerate", series.degenerate},
              {"warnings", series.warnings}};

  if (!series.degenerate) {
    const GaussianPrediction g = gaussian_prediction(model, burn_in, samples);
    report["prediction"] = {{"mean", g.mean},          {"sigma2", g.variance},
                            {"mean_stderr", g.mean_stderr}, {"sigma2_stderr", g.variance_stderr},
                            {"converged", g.converged}, {"chain_mean", {g.chain_mean[0], g.chain_mean[1]}}};
    if (!g.converged) r.notices.push_back("phi chains disagree beyond statistical error; prediction unreliable");
    std::ostringstream curve;
    curve << w.header() << "\nI,density\n";
    const auto& edges = series.stats.histogram.edges();
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double x = 0.5 * (edges[i] + edges[i + 1]);
      curve << fmt(x) << ',' << fmt(g.density(x, n)) << '\n';
    }
    w.csv("gaussian_curve.csv", curve.str(), r);

    if (ensemble > 1) {
      std::vector<double> finite;
      for (double x : series.I) {
        if (std::isfinite(x)) finite.push_back(x);
      }
      const double ks = ks_distance_normal(finite, g.mean, std::sqrt(g.variance / static_cast<double>(n)));
      const double crit = ks_critical(finite.size(), 0.01);
      report["ks"] = ks;
      report["ks_critical_1pct"] = crit;
      const json& spec = check_spec(p);
      if (spec.value("ks", false)) {
        r.checks.push_back(check_line("decay_hist.ks", ks < crit, "KS " + fmt(ks) + " < " + fmt(crit)));
      }
    } else {
      r.notices.push_back("single-sample ensemble: KS comparison skipped");
    }
  }
  const json& spec = check_spec(p);
  if (spec.contains("mean")) {
    const double want = spec.at("mean").get<double>();
    const double tol = spec.value("mean_tol", 0.02);
    r.checks.push_back(check_line("decay_hist.mean", std::abs(m.mean - want) <= tol,
                                  fmt(m.mean) + " vs " + fmt(want) + " +- " + fmt(tol)));
  }
  expect_relative(spec, "sigma2", "sigma2_rel", static_cast<double>(n) * m.variance(), "decay_hist.sigma2", r);
  w.json_file("report.json", report, r);
  return r;
}

RunResult run_evolve(const ExperimentConfig& c) {
  const json& p = c.params;
  if (!p.contains("generator")) throw ConfigError("/params/generator", "missing");
  const ScatteringMatrix gen = parse_generator(p.at("generator"), c.seed, "/params/generator");
  const std::int64_t n_max = param_int(p, "n_max", 2000, 1);
  EvolveOptions opt;
  opt.reunitarize = param_bool(p, "reunitarize", false);

  RunResult r;
  ArtifactWriter w(c);
  const ChainTrace t = evolve_chain(gen, n_max, opt);
  w.csv("trace.csv", t.csv(w.header()), r);
  w.json_file("classification.json", spectrum_json(t.classification), r);
  w.json_file("generator.json", json::parse(to_json(gen)), r);

  json summary{{"label", std::string(to_string(t.classification.label))},
               {"min_T", t.min_T},
               {"max_residual", t.max_residual},
               {"reunitarizations", t.reunitarizations}};
  if (t.plateau_tracked) {
    summary["plateau"] = {{"found", t.plateau_found},      {"window_start", t.window_start},
                          {"mean_T", t.plateau},           {"band", {t.band_lo, t.band_hi}},
                          {"model_band", {t.model_lo, t.model_hi}}, {"max_deviation", t.max_plateau_deviation}};
    summary["fit"] = {{"rate", t.fitted_rate},
                      {"points", t.fit_points},
                      {"slowest_rate", t.classification.slowest_rate},
                      {"ratio", t.rate_ratio},
                      {"beta", t.beta}};
  }
  w.json_file("summary.json", summary, r);

  switch (t.classification.label) {
    case TransportClass::ballistic:
      r.checks.push_back(check_line("evolve.bounded", t.min_T > 0.0, "min T_n = " + fmt(t.min_T)));
      r.checks.push_back(check_line("evolve.stable", t.max_residual <= 1e-10, "max residual " + fmt(t.max_residual)));
      break;
    case TransportClass::partially_localised:
      r.checks.push_back(check_line("evolve.plateau", t.plateau_found,
                                    "max|T_n - T_0| over window = " + fmt(t.max_plateau_deviation)));
      [[fallthrough]];
    case TransportClass::totally_localised:
      r.checks.push_back(check_line("evolve.beta", t.beta != 0, "fitted/slowest = " + fmt(t.rate_ratio)));
      break;
  }
  return r;
}

RunResult run_classify(const ExperimentConfig& c) {
  const json& p = c.params;
  if (!p.contains("generator")) throw ConfigError("/params/generator", "missing");
  const ScatteringMatrix gen = parse_generator(p.at("generator"), c.seed, "/params/generator");
  RunResult r;
  ArtifactWriter w(c);
  const SpectralClassification s = classify(gen);
  json out = spectrum_json(s);
  const double pairing = pairing_residual(s.spectrum);
  out["pairing_residual"] = pairing;
  out["eigenvector_condition"] = s.eigenvector_condition;
  out["defective"] = s.defective;
  r.checks.push_back(check_line("classify.pairing", pairing <= 1e-9, "residual " + fmt(pairing)));
  if (!s.defective) {
    const EigenvectorStructure e = eigenvector_structure(gen);
    out["max_outside_vKv"] = e.max_outside_vKv;
    out["min_circle_vKv"] = e.min_circle_vKv;
    out["has_degeneracy"] = e.has_degeneracy;
    r.checks.push_back(check_line("classify.outside_null", e.max_outside_vKv <= 1e-9,
                                  "max |v^dag K v| = " + fmt(e.max_outside_vKv)));
  }
  w.json_file("classification.json", out, r);
  w.json_file("generator.json", json::parse(to_json(gen)), r);
  return r;
}

RunResult run_measure_suite(const ExperimentConfig& c) {
  const json& p = c.params;
  // d lists per fitted set; every surveyed d reports all three sets.
  std::map<int, std::vector<MeasureSet>> plan;
  std::vector<int> ballistic_d, total_d;
  if (p.contains("ballistic")) ballistic_d = param_int_list(p.at("ballistic"), "d", 1);
  if (p.contains("totally_localised")) total_d = param_int_list(p.at("totally_localised"), "d", 1);
  if (p.contains("d")) {
    for (int d : param_int_list(p, "d", 1)) plan[d];
  }
  for (int d : ballistic_d) plan[d].push_back(MeasureSet::ballistic);
  for (int d : total_d) plan[d].push_back(MeasureSet::totally_localised);
  if (plan.empty()) throw ConfigError("/params/d", "no channel counts given");

  const bool adaptive = p.contains("adaptive");
  AdaptiveOptions aopt;
  std::uint64_t fixed_samples = 100000;
  if (adaptive) {
    const json& a = p.at("adaptive");
    if (!a.is_object()) throw ConfigError("/params/adaptive", "expected an object");
    aopt.initial = static_cast<std::uint64_t>(param_int(a, "initial", 100000, 1000));
    aopt.cap = static_cast<std::uint64_t>(param_int(a, "cap", 10000000, 1000));
    aopt.relative_width = param_number(a, "relative_width", 0.2);
    if (!(aopt.relative_width > 0.0)) throw ConfigError("/params/adaptive/relative_width", "must be positive");
  } else {
    fixed_samples = static_cast<std::uint64_t>(param_int(p, "samples", 100000, 1000));
  }
  SurveyOptions sopt;
  sopt.seed = c.seed;
  sopt.workers = c.parallel;

  RunResult r;
  ArtifactWriter w(c);
  std::vector<MeasureEstimate> rows;
  std::map<int, HaarSurvey> surveys;
  json diagnostics = json::array();
  for (auto& [d, sets] : plan) {
    bool capped = false;
    HaarSurvey s;
    if (adaptive) {
      std::vector<MeasureSet> targets = sets.empty() ? std::vector<MeasureSet>{MeasureSet::localised} : sets;
      AdaptiveSurvey a = adaptive_survey(d, targets, aopt, sopt);
      s = std::move(a.survey);
      capped = a.capped;
    } else {
      s = survey(d, fixed_samples, sopt);
    }
    for (MeasureSet set : {MeasureSet::ballistic, MeasureSet::localised, MeasureSet::totally_localised}) {
      MeasureEstimate m = measure_from_survey(s, set);
      m.capped = capped && std::find(sets.begin(), sets.end(), set) != sets.end();
      rows.push_back(m);
      if (m.capped) {
        r.notices.push_back("d=" + std::to_string(d) + " " + std::string(set_id(set)) +
                            " hit the sample cap; ci_hi is an upper bound");
      }
    }
    diagnostics.push_back({{"d", d}, {"samples", s.samples}, {"redraws", s.redraws}, {"near_marginal", s.near_marginal},
                           {"capped", capped}});
    surveys.emplace(d, std::move(s));
  }
  w.csv("measures.csv", measure_csv(rows, w.header()), r);

  json fits = json::object();
  const json& spec = check_spec(p);
  auto fit_one = [&](const std::vector<int>& ds, ScalingModel model, MeasureSet set, const char* key) {
    if (ds.empty()) return;
    std::vector<MeasurePoint> pts;
    for (int d : ds) pts.push_back(measure_from_survey(surveys.at(d), set).point());
    const auto usable = std::count_if(pts.begin(), pts.end(), [](const MeasurePoint& m) { return m.hits > 0; });
    if (usable < 3) {
      r.notices.push_back(std::string(key) + " fit skipped: fewer than three d values with nonzero hits");
      return;
    }
    const FitResult f = fit_measure_scaling(pts, model);
    for (const auto& warning : f.warnings) r.notices.push_back(warning);
    fits[key] = json::parse(f.json());
    if (spec.contains(key)) {
      const json& s = spec.at(key);
      expect_relative(s, "slope", "slope_rel", f.slope, std::string("measure.") + key + ".slope", r);
      expect_relative(s, "prefactor", "prefactor_rel", f.prefactor, std::string("measure.") + key + ".prefactor", r);
    }
  };
  fit_one(ballistic_d, ScalingModel::ballistic, MeasureSet::ballistic, "ballistic");
  fit_one(total_d, ScalingModel::total_localised, MeasureSet::totally_localised, "totally_localised");
  w.json_file("fits.json", {{"fits", fits}, {"diagnostics", diagnostics}}, r);

  if (spec.contains("d1_ballistic")) {
    const auto it = surveys.find(1);
    if (it != surveys.end()) {
      const MeasureEstimate m = measure_from_survey(it->second, MeasureSet::ballistic);
      const double want = spec.at("d1_ballistic").get<double>();
      const double tol = spec.value("d1_ballistic_tol", 0.005);
      r.checks.push_back(check_line("measure.d1_ballistic", std::abs(m.estimate - want) <= tol,
                                    fmt(m.estimate) + " vs " + fmt(want) + " +- " + fmt(tol)));
    }
  }
  return r;
}

RunResult run_fit(const ExperimentConfig& c) {
  const json& p = c.params;
  const std::string model_name = p.value("model", std::string("ballistic"));
  ScalingModel model;
  MeasureSet set;
  if (model_name == "ballistic") {
    model = ScalingModel::ballistic;
    set = MeasureSet::ballistic;
  } else if (model_name == "total_localised" || model_name == "totally_localised") {
    model = ScalingModel::total_localised;
    set = MeasureSet::totally_localised;
  } else {
    throw ConfigError("/params/model", "expected ballistic or total_localised");
  }
  std::vector<MeasurePoint> pts;
  if (p.contains("measures_csv")) {
    std::ifstream in(p.at("measures_csv").get<std::string>());
    if (!in) throw ConfigError("/params/measures_csv", "cannot open file");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("d,", 0) == 0) continue;
      std::stringstream ss(line);
      std::string d, s, n, hits;
      std::getline(ss, d, ',');
      std::getline(ss, s, ',');
      std::getline(ss, n, ',');
      std::getline(ss, hits, ',');
      if (s == set_id(set)) pts.push_back({std::stoi(d), std::stoull(hits), std::stoull(n)});
    }
  } else {
    if (!p.contains("points") || !p.at("points").is_array()) throw ConfigError("/params/points", "expected a list");
    const json& list = p.at("points");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "/params/points/" + std::to_string(i);
      const json& q = list[i];
      if (!q.is_object()) throw ConfigError(path, "expected {\"d\", \"hits\", \"n\"}");
      const auto d = param_int(q, "d", -1, 1);
      const auto hits = param_int(q, "hits", -1, 0);
      const auto n = param_int(q, "n", -1, 1);
      if (d < 0 || hits < 0 || n < 0) throw ConfigError(path, "expected {\"d\", \"hits\", \"n\"}");
      if (hits > n) throw ConfigError(path + "/hits", "exceeds n");
      pts.push_back({static_cast<int>(d), static_cast<std::uint64_t>(hits), static_cast<std::uint64_t>(n)});
    }
  }
  const auto usable = std::count_if(pts.begin(), pts.end(), [](const MeasurePoint& m) { return m.hits > 0; });
  if (usable < 3) throw ConfigError("/params/points", "need at least three points with nonzero hits");
  RunResult r;
  ArtifactWriter w(c);
  const FitResult f = fit_measure_scaling(pts, model);
  for (const auto& warning : f.warnings) r.notices.push_back(warning);
  w.json_file("fit.json", json::parse(f.json()), r);
  const json& spec = check_spec(p);
  expect_relative(spec, "slope", "slope_rel", f.slope, "fit.slope", r);
  expect_relative(spec, "prefactor", "prefactor_rel", f.prefactor, "fit.prefactor", r);
  return r;
}

RunResult run_spectral_suite(const ExperimentConfig& c) {
  const json& p = c.params;
  const std::vector<int> ds = param_int_list(p, "d", 1);
  const auto samples = static_cast<std::uint64_t>(param_int(p, "samples", 100000, 10000));
  SurveyOptions sopt;
  sopt.seed = c.seed;
  sopt.workers = c.parallel;
  sopt.keep_values = true;
  if (p.contains("bins") && (!p.at("bins").is_number_integer() || p.at("bins").get<std::int64_t>() < 1)) {
    throw ConfigError("/params/bins", "must be a positive integer");
  }
  if (p.contains("tail_bins") && (!p.at("tail_bins").is_number_integer() || p.at("tail_bins").get<std::int64_t>() < 1)) {
    throw ConfigError("/params/tail_bins", "must be a positive integer");
  }
  sopt.bulk_bins = static_cast<std::size_t>(param_int(p, "bins", 20, 1));
  sopt.tail_bins = static_cast<std::size_t>(param_int(p, "tail_bins", 24, 1));
  const bool want_pmax = c.experiment != "pu";
  const bool want_pu = c.experiment != "pmax";
  const bool want_collapse = c.experiment == "collapse";

  RunResult r;
  ArtifactWriter w(c);
  std::vector<std::pair<int, EnsembleStats>> hists;
  json per_d = json::array();
  std::vector<std::pair<int, double>> medians;
  const json& spec = check_spec(p);
  for (int d : ds) {
    const HaarSurvey s = survey(d, samples, sopt);
    const std::string tag = "_d" + std::to_string(d) + ".csv";
    json info{{"d", d}, {"samples", s.samples}, {"redraws", s.redraws}, {"near_marginal", s.near_marginal}};
    if (want_pmax) {
      w.csv("pmax" + tag, s.pmax.histogram_csv(w.header()), r);
      info["ballistic_point_mass"] = s.pmax.point_mass_fraction();
      info["median_log_max"] = median(s.log_max_modulus);
      medians.emplace_back(d, median(s.log_max_modulus));
      if (d >= 2) {
        const auto& h = s.pmax.histogram;
        try {
          const TailFit t = fit_power_tail(h.edges(), h.counts(), s.pmax.total(), 4.0, 16.0, std::sqrt(double(d)));
          info["tail"] = {{"window_scaled", {t.lo, t.hi}}, {"exponent", -t.exponent},
                          {"exponent_stderr", t.exponent_stderr}, {"amplitude", t.amplitude3},
                          {"amplitude_stderr", t.amplitude3_stderr}, {"count", t.count}};
          if (spec.value("tail_exponent", false)) {
            r.checks.push_back(check_line("pmax.tail_exponent_d" + std::to_string(d), std::abs(t.exponent - 3.0) <= 0.3,
                                          "exponent -" + fmt(t.exponent) + " vs -3 +- 0.3"));
          }
        } catch (const StructuralError& e) {
          r.notices.push_back("d=" + std::to_string(d) + " tail fit skipped: " + e.what());
        }
      }
      hists.emplace_back(d, s.pmax);
    }
    if (want_pu) {
      const EnsembleStats pu = pu_from_survey(s);
      w.csv("pu" + tag, pu.histogram_csv(w.header()), r);
      info["mean_du_over_d"] = pu.moments.mean;
    }
    per_d.push_back(info);
  }
  json out{{"per_d", per_d}};

  if (want_collapse) {
    if (std::count_if(ds.begin(), ds.end(), [](int d) { return d >= 2; }) < 2) {
      r.notices.push_back("collapse skipped: needs two values of d >= 2");
    } else {
      const CollapseReport cr = scaling_collapse(hists);
      out["collapse"] = json::parse(cr.json());
      for (const auto& note : cr.notes) r.notices.push_back(note);
      if (spec.value("collapse", false)) {
        bool decreasing = true;
        for (std::size_t i = 1; i < cr.sup_distance.size(); ++i) decreasing = decreasing && cr.sup_distance[i] < cr.sup_distance[i - 1];
        std::string detail;
        for (double x : cr.sup_distance) detail += fmt(x) + " ";
        r.checks.push_back(check_line("collapse.sup_distance_decreasing", decreasing, detail));
        r.checks.push_back(check_line("collapse.amplitude", std::abs(cr.amplitude - 4.0) <= 0.3,
                                      "a = " + fmt(cr.amplitude) + " vs 4.0 +- 0.3"));
      }
    }
  }
  if (want_pmax && spec.value("median_growth", false)) {
    std::sort(medians.begin(), medians.end());
    for (std::size_t i = 1; i < medians.size(); ++i) {
      if (medians[i - 1].first < 4) continue;
      const double growth = medians[i].second - medians[i - 1].second;
      const double expect = 0.5 * std::log(static_cast<double>(medians[i].first) / medians[i - 1].first);
      r.checks.push_back(check_line("pmax.median_growth_" + std::to_string(medians[i - 1].first) + "_" +
                                        std::to_string(medians[i].first),
                                    std::abs(growth / expect - 1.0) <= 0.15,
                                    "growth " + fmt(growth) + " vs 0.5 log ratio " + fmt(expect)));
    }
  }
  w.json_file(c.experiment + ".json", out, r);
  return r;
}

RunResult run_experiment(const ExperimentConfig& c) {
  const std::string& e = c.experiment;
  if (e == "portrait") return run_portrait(c);
  if (e == "noisy-portrait") return run_noisy_portrait(c);
  if (e == "decay-hist") return run_decay_hist(c);
  if (e == "evolve") return run_evolve(c);
  if (e == "classify") return run_classify(c);
  if (e == "measure") return run_measure_suite(c);
  if (e == "fit") return run_fit(c);
  if (e == "pmax" || e == "pu" || e == "collapse") return run_spectral_suite(c);
  throw ConfigError("/experiment", "unknown experiment \"" + e + "\"");
}

}  // namespace chainscat::cli
