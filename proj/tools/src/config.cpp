#include "chainscat_cli/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chainscat/error.hpp"
#include "chainscat/types.hpp"

namespace chainscat::cli {
namespace {

std::string param_path(const char* key) { return std::string("/params/") + key; }

json uniform(double lo, double hi) { return json{{"dist", "uniform"}, {"lo", lo}, {"hi", hi}}; }
json constant(double v) { return json{{"dist", "const"}, {"value", v}}; }

json portrait_initials() {
  json list = json::array();
  for (int k = 0; k < 20; ++k) list.push_back(json::array({0.05 + 0.045 * k, 0.0}));
  return list;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"portrait", "noisy-portrait", "decay-hist", "evolve", "classify",
                                              "measure",  "pmax",           "pu",         "collapse", "fit"};
  return names;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json ExperimentConfig::to_json() const {
  return json{{"experiment", experiment}, {"seed", seed}, {"parallel", parallel}, {"out", out}, {"params", params}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("/", "config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") {
      if (!value.is_string()) throw ConfigError("/experiment", "expected a string");
      c.experiment = value.get<std::string>();
      const auto& names = experiment_names();
      if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
        throw ConfigError("/experiment", "unknown experiment \"" + c.experiment + "\"");
      }
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw ConfigError("/seed", "expected a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "parallel") {
      if (!value.is_number_unsigned() || value.get<std::uint64_t>() == 0 || value.get<std::uint64_t>() > 1024) {
        throw ConfigError("/parallel", "expected an integer in [1, 1024]");
      }
      c.parallel = value.get<unsigned>();
    } else if (key == "out") {
      if (!value.is_string() || value.get<std::string>().empty()) throw ConfigError("/out", "expected a path");
      c.out = value.get<std::string>();
    } else if (key == "params") {
      if (!value.is_object()) throw ConfigError("/params", "expected an object");
      c.params = value;
    } else {
      throw ConfigError("/" + key, "unknown field");
    }
  }
  return c;
}

std::string ExperimentConfig::canonical() const {
  return json{{"experiment", experiment}, {"seed", seed}, {"params", params}}.dump();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

std::string ExperimentConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

std::string ExperimentConfig::header() const {
  return "# chainscat " + experiment + " config_hash=" + hash_hex() + " seed=" + std::to_string(seed);
}

ExperimentConfig default_config(std::string_view experiment) {
  ExperimentConfig c;
  c.experiment = std::string(experiment);
  c.seed = 20240101;
  json& p = c.params;
  if (experiment == "portrait") {
    p = {{"A", 0.5}, {"lambda", 0.628319}, {"alpha_L", 0.0}, {"delta", 0.0}, {"steps", 2000},
         {"initial", portrait_initials()}};
  } else if (experiment == "noisy-portrait") {
    const double eps = 0.001;
    p = {{"model", {{"A", uniform(0.5 - eps, 0.5 + eps)}, {"lambda", uniform(0.628319 - eps, 0.628319 + eps)},
                    {"alpha_L", constant(0.0)}}},
         {"steps", 10000},
         {"initial", json::array({json::array({0.3, 1.0}), json::array({0.5, 2.5})})}};
  } else if (experiment == "decay-hist") {
    p = {{"model", {{"B", uniform(0.0, 1.0)}, {"lambda", constant(kPi / 10.0)}, {"alpha_L", uniform(0.0, kTwoPi)}}},
         {"n", 100},
         {"ensemble", 10000},
         {"bins", 50},
         {"approximate", false},
         {"burn_in", 1000},
         {"samples", 100000},
         {"check", {{"mean", -1.0}, {"mean_tol", 0.02}, {"sigma2", 1.4674}, {"sigma2_rel", 0.1}, {"ks", true}}}};
  } else if (experiment == "evolve") {
    p = {{"generator", {{"kind", "haar"}, {"d", 3}, {"require", "partially_localised"}}}, {"n_max", 2000}};
  } else if (experiment == "classify") {
    p = {{"generator", {{"kind", "haar"}, {"d", 3}}}};
  } else if (experiment == "measure") {
    p = {{"ballistic", {{"d", {1, 2, 3, 4}}}},
         {"totally_localised", {{"d", {1, 2, 4, 8, 16}}}},
         {"adaptive", {{"initial", 100000}, {"cap", 10000000}, {"relative_width", 0.2}}},
         {"check",
          {{"ballistic", {{"slope", 0.4658}, {"slope_rel", 0.1}, {"prefactor", 0.7877}, {"prefactor_rel", 0.15}}},
           {"totally_localised", {{"slope", 1.034}, {"slope_rel", 0.1}, {"prefactor", 0.711}, {"prefactor_rel", 0.15}}},
           {"d1_ballistic", 0.5},
           {"d1_ballistic_tol", 0.005}}}};
  } else if (experiment == "pmax" || experiment == "pu" || experiment == "collapse") {
    p = {{"d", {2, 4, 8}}, {"samples", 100000}, {"bins", 20}, {"tail_bins", 24}};
    if (experiment != "pu") {
      p["check"] = {{"tail_exponent", true}, {"median_growth", true}, {"collapse", experiment == "collapse"}};
    }
  } else if (experiment == "fit") {
    p = {{"model", "ballistic"}, {"points", json::array()}};
  } else {
    throw ConfigError("/experiment", "unknown experiment \"" + std::string(experiment) + "\"");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::string_view experiment) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  if (j.is_object() && !j.contains("experiment")) j["experiment"] = std::string(experiment);
  ExperimentConfig c = ExperimentConfig::from_json(j);
  if (c.experiment != experiment) {
    throw ConfigError("/experiment", "config is for \"" + c.experiment + "\", not \"" + std::string(experiment) + "\"");
  }
  return c;
}

double param_number(const json& params, const char* key) {
  if (!params.contains(key)) throw ConfigError(param_path(key), "missing");
  const json& v = params.at(key);
  if (!v.is_number()) throw ConfigError(param_path(key), "expected a number");
  return v.get<double>();
}

double param_number(const json& params, const char* key, double fallback) {
  return params.contains(key) ? param_number(params, key) : fallback;
}

std::int64_t param_int(const json& params, const char* key, std::int64_t fallback, std::int64_t min_value) {
  if (!params.contains(key)) return fallback;
  const json& v = params.at(key);
  if (!v.is_number_integer()) throw ConfigError(param_path(key), "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < min_value) throw ConfigError(param_path(key), "must be at least " + std::to_string(min_value));
  return x;
}

bool param_bool(const json& params, const char* key, bool fallback) {
  if (!params.contains(key)) return fallback;
  if (!params.at(key).is_boolean()) throw ConfigError(param_path(key), "expected true or false");
  return params.at(key).get<bool>();
}

std::vector<int> param_int_list(const json& params, const char* key, int min_value) {
  if (!params.contains(key)) throw ConfigError(param_path(key), "missing");
  const json& v = params.at(key);
  if (!v.is_array() || v.empty()) throw ConfigError(param_path(key), "expected a non-empty list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < min_value || v[i].get<std::int64_t>() > 4096) {
      throw ConfigError(param_path(key) + "/" + std::to_string(i), "expected an integer >= " + std::to_string(min_value));
    }
    out.push_back(v[i].get<int>());
  }
  return out;
}

}  // namespace chainscat::cli
