#pragma once

#include <string>
#include <vector>

#include "corrlab_cli/output.hpp"

namespace corrlab::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitGuard = 4,
  kExitInconclusive = 5,
};

/// Subcommand names in the order they are listed by --help.
const std::vector<std::string>& command_names();

/// Runs one subcommand on a validated config. Returns kExitOk or
/// kExitInconclusive; errors propagate as exceptions.
int run_command(const std::string& name, RunContext& ctx);

}  // namespace corrlab::cli
