#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "corrlab/corrector.hpp"
#include "corrlab/scaling_field.hpp"

namespace corrlab {

/// One (eps, lambda) evaluation point of a campaign.
struct Probe {
  double eps = 0.25;
  double lambda = 1.0;
};

/// Samples of Phi_eps(f_lambda) at one probe, ordered by replica index.
struct SampleSet {
  Probe probe;
  std::vector<double> values;
  std::vector<SeedSpec> seeds;
};

struct CampaignConfig {
  LatticeShape shape{3, 32};
  ConductanceLaw law;
  std::vector<double> xi{1.0, 0.0, 0.0};
  double mu = 0.0;
  TestFunction f{TestFunctionKind::mollifier_bump, 3};
  std::vector<Probe> probes;
  int n_replicas = 32;
  std::uint64_t master_seed = 0;
  std::uint32_t first_replica = 0;
  SolverConfig solver;
  int threads = 1;
};

/// Called once per replica (possibly concurrently) after the corrector solve;
/// `slot` is the replica's position in the campaign.
using ReplicaObserver =
    std::function<void(std::size_t slot, const Environment& env, const CorrectorSolution& corrector)>;

/// Samples an environment per replica, solves the corrector once and
/// evaluates every probe. Admissibility of all probes is checked up front;
/// failures inside a replica are rethrown with the replica index prepended.
std::vector<SampleSet> run_campaign(const CampaignConfig& cfg, const ReplicaObserver& observer = {});

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BootstrapOptions {
  int resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
};

/// L1 distance between the empirical CDF of the samples (studentized with the
/// unbiased standard deviation when `normalize`) and the standard normal CDF,
/// integrated exactly between order statistics. Throws DegenerateDistribution
/// for zero spread with normalize == true, PreconditionError for n < 2.
double wasserstein1_to_gaussian(std::span<const double> samples, bool normalize);

/// 95th (or `level`) percentile of the studentized distance for n exact
/// standard normal samples: the Monte Carlo floor below which an observed
/// distance is indistinguishable from sampling noise.
double noise_floor(int n, int simulations = 400, std::uint64_t seed = 0, double level = 0.95);

struct StatsReport {
  int n = 0;
  double mean = 0.0;
  double mean_stderr = 0.0;
  double variance = 0.0;  // unbiased
  Interval variance_ci;
  double sigma_eps = 0.0;
  Interval sigma_eps_ci;
  double dK = 0.0;
  Interval dK_ci;
  double noise_floor = 0.0;
  bool above_noise_floor = false;
  /// Zero spread: dK is replaced by the bound sqrt(variance) (= 0).
  bool degenerate = false;
};

StatsReport compute_stats(std::span<const double> values, const BootstrapOptions& boot, int noise_simulations = 400);

enum class FitStatus { ok, inconclusive };
std::string_view to_string(FitStatus s);

struct RateFit {
  std::vector<double> eps_grid;  // strictly decreasing
  std::vector<double> dK_values;
  std::vector<bool> mask;        // true where the point entered the fit
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  Interval slope_ci;
  int n_used = 0;
  FitStatus status = FitStatus::inconclusive;
};

/// OLS of log dK against log(eps^{d/2} |log eps|) over masked points (empty
/// mask = all). Fewer than 3 points gives status inconclusive.
RateFit rate_fit(std::span<const double> eps, std::span<const double> dK, int d, const std::vector<bool>& mask = {});

/// rate_fit on campaign sample sets with the noise-floor mask and a bootstrap
/// slope interval (replicas resampled jointly across eps).
RateFit rate_fit_campaign(const std::vector<SampleSet>& sets, int d, const BootstrapOptions& boot,
                          int noise_simulations = 400);

struct MomentRow {
  double eps = 0.0;
  double lambda = 1.0;
  int p = 2;
  double moment = 0.0;       // <|Phi|^p>^{1/p}
  double normalized = 0.0;   // moment / lambda^{1 - d/2}
  Interval normalized_ci;
  bool odd = false;          // higher-variance estimator
};

/// Normalized absolute moments for every sample set and p (1 <= p <= 8).
std::vector<MomentRow> moment_scan(const std::vector<SampleSet>& sets, std::span<const int> p_list, int d,
                                   const BootstrapOptions& boot);

}  // namespace corrlab
