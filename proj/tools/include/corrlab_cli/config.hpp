#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "corrlab/bound_lab.hpp"
#include "corrlab/covariance.hpp"
#include "corrlab/environment.hpp"
#include "corrlab/gauss_stats.hpp"
#include "corrlab/solver.hpp"
#include "corrlab/test_function.hpp"
#include "json.hpp"

namespace corrlab::cli {

struct SteinSettings {
  int R = 0;  // 0 = L / 2
  int m = 16;
  std::vector<int> radius_profile;
  bool decay = true;
};

struct CovarianceSettings {
  double r_min = 4.0;
  double r_max = 10.0;
  double table_radius = 10.0;  // rows of the covariance CSV: |x| <= table_radius
  KernelModel model = KernelModel::periodic_lattice;
  FitWeighting weighting = FitWeighting::relative;
  bool fit_offset = false;
};

struct LemmaSettings {
  int d = 3;
  ScanGrid xesum;
  ScanGrid eepsum;
};

/// Every experiment parameter, with defaults materialized on load.
struct ExperimentConfig {
  int d = 3;
  int L = 32;
  ConductanceLaw law;
  std::vector<double> xi;
  double mu = 0.0;
  TestFunctionKind test_function = TestFunctionKind::mollifier_bump;
  std::vector<double> center;
  std::vector<double> eps_list;
  std::vector<double> lambda_list{1.0};
  std::vector<int> p_list{2, 4};
  int n_replicas = 32;
  std::uint64_t master_seed = 0;
  SolverConfig solver;
  SteinSettings stein;
  CovarianceSettings covariance;
  int bootstrap_resamples = 1000;
  double bootstrap_level = 0.95;
  int noise_simulations = 400;
  LemmaSettings lemma;
  std::string output_dir = "runs";

  LatticeShape shape() const { return LatticeShape(d, L); }
  TestFunction make_test_function() const { return TestFunction(test_function, d, center); }
  /// Cartesian product eps_list x lambda_list (eps major).
  std::vector<Probe> probes() const;
  std::vector<Probe> probes_at_lambda(double lambda) const;
  BootstrapOptions bootstrap(std::uint32_t stream = 0) const;
};

/// Parses a config document; unknown keys and invalid values raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Default config (an empty document).
ExperimentConfig default_config();

/// Checks every module guard (lattice, law, solver, admissibility of all
/// probes, lemma radius limits) before any computation. Throws ConfigError or GuardError.
void validate(const ExperimentConfig& cfg);

/// Fully materialized config. `output_dir` is excluded from the hashed form.
nlohmann::ordered_json to_json(const ExperimentConfig& cfg, bool include_output_dir = true);

/// SHA-256 (hex) of the canonical materialized config without output_dir.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace corrlab::cli
