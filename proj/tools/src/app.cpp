#include "chainscat_cli/app.hpp"

#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "chainscat/error.hpp"
#include "chainscat_cli/config.hpp"
#include "chainscat_cli/runners.hpp"

namespace chainscat::cli {
namespace {

const char* describe(const std::string& name) {
  if (name == "portrait") return "phase portrait of the single-channel static map";
  if (name == "noisy-portrait") return "phase portrait under weak position-dependent noise";
  if (name == "decay-hist") return "distribution of the decay rate I_n with the Gaussian prediction";
  if (name == "evolve") return "transmission along a lengthening chain, plateau and decay fit";
  if (name == "classify") return "transfer spectrum and transport class of one generator";
  if (name == "measure") return "Haar measure of ballistic and totally localised sets, with scaling fits";
  if (name == "pmax") return "distribution of the maximal transfer eigenvalue modulus";
  if (name == "pu") return "distribution of the fraction of eigenvalues outside the unit circle";
  if (name == "collapse") return "P_max, P_u and the large-d scaling collapse";
  if (name == "fit") return "exponential scaling fit of measure estimates";
  return "";
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> parallel;
  bool check = false;
  bool print_config = false;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scattering-matrix chain experiments", "chainscat"};
  app.require_subcommand(1);
  Flags flags;
  for (const std::string& name : experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", flags.config, "JSON config file (built-in defaults otherwise)");
    sub->add_option("--seed", flags.seed, "override the master seed");
    sub->add_option("--out", flags.out, "override the output directory");
    sub->add_option("--parallel", flags.parallel, "worker threads (artifacts do not depend on it)")
        ->check(CLI::Range(1u, 1024u));
    sub->add_flag("--check", flags.check, "evaluate the experiment's acceptance thresholds; exit 4 on a miss");
    sub->add_flag("--print-config", flags.print_config, "print the effective config and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig config = flags.config.empty() ? default_config(name) : load_config(flags.config, name);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.out) config.out = *flags.out;
    if (flags.parallel) config.parallel = *flags.parallel;
    if (flags.print_config) {
      out << config.to_json().dump(2) << '\n';
      return kSuccess;
    }

    const RunResult result = run_experiment(config);
    out << config.header() << '\n';
    for (const auto& path : result.artifacts) out << "wrote " << path.string() << '\n';
    for (const auto& notice : result.notices) err << "note: " << notice << '\n';
    if (flags.check) {
      for (const CheckLine& c : result.checks) {
        out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      }
      if (!result.checks_passed()) return kCheckFailed;
    }
    return kSuccess;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace chainscat::cli
