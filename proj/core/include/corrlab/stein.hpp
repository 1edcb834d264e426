#pragma once

#include <vector>

#include "corrlab/gauss_stats.hpp"
#include "corrlab/sensitivity.hpp"

namespace corrlab {

struct SteinConfig {
  /// Replica campaign; its probes form the eps grid (usually at one lambda).
  CampaignConfig campaign;
  /// Inner-sum truncation |e - e'| <= R; 0 selects L / 2.
  int truncation_radius = 0;
  /// Anchors e' sampled per probe, stratified in shells of |eps e'|.
  int anchors = 16;
  /// Additional radii reported in the truncation profile.
  std::vector<int> radius_profile;
  /// Contiguous replica groups for the jackknife uncertainty.
  int jackknife_groups = 8;
};

struct SteinProfilePoint {
  int radius = 0;
  double truncated = 0.0;  // inner sums cut at the radius, no tail
  double with_tail = 0.0;
};

struct SteinBoundReport {
  Probe probe;
  /// sqrt(5/pi) sqrt(sum_{e'} (sum_e <|d_e F|^4>^{1/4} <|d_{e'} d_e F|^4>^{1/4})^2), F = Phi / sigma_eps.
  double bound = 0.0;
  double truncated_bound = 0.0;
  double tail_estimate = 0.0;  // bound - truncated_bound
  int truncation_radius = 0;
  int sampled_anchors = 0;
  int shells = 0;
  int mc_replicas = 0;
  double sigma_eps = 0.0;
  double sampling_stderr = 0.0;  // stratified anchor sampling
  double replica_stderr = 0.0;   // grouped jackknife over replicas
  double uncertainty = 0.0;      // both combined in quadrature
  Interval bound_ci;             // bound -/+ 1.96 uncertainty, clipped at 0
  bool degenerate = false;       // all derivatives vanish
  std::vector<SteinProfilePoint> profile;
};

struct SteinRun {
  std::vector<SampleSet> samples;  // Phi_eps samples of the same replicas
  std::vector<SteinBoundReport> reports;
};

/// Monte Carlo estimate of the Stein bound on the replicas of the campaign.
/// Requires >= 16 replicas and R <= L / 2.
SteinRun stein_bound(const SteinConfig& cfg);

/// Comparison of an observed distance with the bound at the same probe.
/// Both sides enter with 95% half-widths: the dK bootstrap half-width (at
/// least the noise floor, the resolution of the estimator) and 1.96 times the
/// bound's standard uncertainty, combined in quadrature.
struct Dominance {
  double dK = 0.0;
  double bound = 0.0;
  double dK_halfwidth = 0.0;
  double bound_halfwidth = 0.0;
  double combined = 0.0;
  double excess = 0.0;  // dK - bound - combined; <= 0 when the bound holds
  bool holds = true;
};
Dominance check_dominance(const StatsReport& stats, const SteinBoundReport& report);

/// Anchors for one probe: shells of width 1/2 in |eps mid(e')| (the last shell
/// open), at least two anchors per shell, the rest allocated in proportion to
/// shell sizes, drawn without replacement from the anchors stream.
struct AnchorSample {
  std::vector<std::size_t> edges;
  std::vector<int> shell_of;         // per sampled anchor
  std::vector<std::size_t> shell_sizes;
};
AnchorSample stratified_anchors(const LatticeShape& shape, double eps, int m, std::uint64_t seed,
                                std::uint32_t stream);

}  // namespace corrlab
