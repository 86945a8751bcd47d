#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace chainscat::cli {

using nlohmann::json;

const std::vector<std::string>& experiment_names();

/// One experiment run: which experiment, its parameters, and provenance.
///
/// `seed` and `params` define the artifacts; `parallel` and `out` do not and
/// are left out of the hash.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  unsigned parallel = 1;
  std::string out = "out";
  json params = json::object();

  json to_json() const;
  static ExperimentConfig from_json(const json& j);

  /// Compact JSON with sorted keys of {experiment, seed, params}.
  std::string canonical() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;
  /// "# chainscat <experiment> config_hash=<hex> seed=<seed>"
  std::string header() const;

  bool operator==(const ExperimentConfig&) const = default;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Default parameters for each experiment.
ExperimentConfig default_config(std::string_view experiment);

/// Read a config file; `experiment` must match its "experiment" field if
/// present. Throws ConfigError with a field path.
ExperimentConfig load_config(const std::filesystem::path& path, std::string_view experiment);

/// Typed accessors on params, raising ConfigError("/params/<key>", ...).
double param_number(const json& params, const char* key);
double param_number(const json& params, const char* key, double fallback);
std::int64_t param_int(const json& params, const char* key, std::int64_t fallback, std::int64_t min_value);
bool param_bool(const json& params, const char* key, bool fallback);
std::vector<int> param_int_list(const json& params, const char* key, int min_value);

}  // namespace chainscat::cli
