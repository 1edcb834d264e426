#pragma once

#include <string>
#include <vector>

namespace corrlab::cli {

/// Full command-line entry point: parses flags, loads and validates the
/// config, runs the subcommand and maps errors to exit codes.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace corrlab::cli
