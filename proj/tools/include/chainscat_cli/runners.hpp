#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chainscat/smatrix.hpp"
#include "chainscat_cli/config.hpp"

namespace chainscat::cli {

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  std::vector<std::filesystem::path> artifacts;
  std::vector<CheckLine> checks;
  std::vector<std::string> notices;

  bool checks_passed() const;
};

/// Writes artifacts under config.out. CSV files start with config.header();
/// JSON files carry the same provenance in a leading "provenance" object.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(const ExperimentConfig& config);

  void csv(const std::string& name, const std::string& body_with_header, RunResult& result) const;
  void json_file(const std::string& name, const json& payload, RunResult& result) const;
  const std::string& header() const noexcept { return header_; }

 private:
  std::filesystem::path dir_;
  std::string header_;
  json provenance_;
};

/// Generator selection shared by evolve and classify:
/// {"kind": "single_channel", "A", "lambda", "alpha_L", "delta"} |
/// {"kind": "haar", "d", "require"?} | {"kind": "matrix", "d", "re", "im"} |
/// {"kind": "file", "path"} | {"kind": "identity", "d"}.
ScatteringMatrix parse_generator(const json& spec, std::uint64_t seed, const std::string& path);

RunResult run_portrait(const ExperimentConfig& c);
RunResult run_noisy_portrait(const ExperimentConfig& c);
RunResult run_decay_hist(const ExperimentConfig& c);
RunResult run_evolve(const ExperimentConfig& c);
RunResult run_classify(const ExperimentConfig& c);
RunResult run_measure_suite(const ExperimentConfig& c);
RunResult run_fit(const ExperimentConfig& c);
/// pmax, pu and collapse share one survey per d; the experiment id selects
/// which artifacts are written.
RunResult run_spectral_suite(const ExperimentConfig& c);

RunResult run_experiment(const ExperimentConfig& c);

}  // namespace chainscat::cli
