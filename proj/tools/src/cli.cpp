#include "corrlab_cli/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "corrlab/errors.hpp"
#include "corrlab_cli/commands.hpp"

namespace corrlab::cli {

namespace {

void setup_logging(const std::string& level) {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("corrlab");
    spdlog::set_default_logger(l);
    return l;
  }();
  logger->set_level(spdlog::level::from_str(level));
}

}  // namespace

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"corrlab: corrector laboratory for the random conductance model"};
  app.require_subcommand(1);
  std::string config_path;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::string log_level = "info";
  app.add_option("--config", config_path, "Experiment config (JSON); defaults apply when omitted");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--seed", seed, "Override master_seed");
  app.add_option("--output", output, "Override output_dir");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");
  for (const std::string& name : command_names()) app.add_subcommand(name)->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  setup_logging(log_level);

  try {
    ExperimentConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    if (seed) cfg.master_seed = *seed;
    if (output) cfg.output_dir = *output;
    validate(cfg);
    RunContext ctx(cfg, sub, threads);
    spdlog::info("{}: config {} -> {}", sub, ctx.hash(), ctx.dir().string());
    const int status = run_command(sub, ctx);
    ctx.write_manifest(status);
    std::cout << ctx.dir().string() << '\n';
    if (status == kExitInconclusive) spdlog::warn("{}: finished with inconclusive statistics", sub);
    return status;
  } catch (const ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return kExitConfig;
  } catch (const SolverError& e) {
    spdlog::error("solver: {}", e.what());
    return kExitSolver;
  } catch (const AccuracyError& e) {
    spdlog::error("quadrature accuracy: {} (achieved {})", e.what(), e.achieved());
    return kExitSolver;
  } catch (const PreconditionError& e) {
    spdlog::error("guard: {}", e.what());
    return kExitGuard;
  } catch (const DegenerateDistribution& e) {
    spdlog::error("degenerate sample: {}", e.what());
    return kExitGuard;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kExitInternal;
  }
}

}  // namespace corrlab::cli
