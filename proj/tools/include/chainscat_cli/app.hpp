#pragma once

#include <iosfwd>

namespace chainscat::cli {

/// Exit codes of the chainscat command.
enum ExitCode : int { kSuccess = 0, kConfigError = 2, kNumericalError = 3, kCheckFailed = 4 };

/// Parse arguments, run one experiment and report to `out` / `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace chainscat::cli
