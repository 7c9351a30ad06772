#pragma once

#include <string>
#include <vector>

namespace macbound {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Parses `args` (program name first), merges a `--config` key=value file
/// underneath the explicit flags and runs the chosen subcommand.
int parse_and_dispatch(const std::vector<std::string>& args);

/// Expands "lo:hi:points:lin|log" into an ascending grid.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace macbound
