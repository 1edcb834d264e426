#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace corrlab {

/// One left/right comparison of a convolution-sum inequality. Points and
/// norms are Euclidean on Z^d; sums enumerate lattice points exactly.
struct LemmaCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double tail = 0.0;        // integral tail bound included in lhs (eepsum)
  std::size_t points = 0;   // lattice points summed
};

/// Largest summation radius allowed in dimension d (128 for d = 3).
double max_summation_radius(int d);

/// lhs = sum_{|x| <= 1/eps} (1 + |x - e|)^{1-d},  rhs = eps^{-1} / (1 + |eps e|)^{d-1}.
/// Requires d >= 3, eps in (0, 1]; GuardError when 1/eps exceeds the radius limit.
LemmaCheck xesum_check(int d, std::span<const int> e, double eps);

/// lhs = sum_e (1 + |e - e'|)^{-d} (1 + |eps e|)^{-p}: exact for |e| <= radius plus
/// a monotone integral bound on the rest, so lhs is an upper estimate.
/// rhs = |log eps| / (1 + |eps e'|)^d + |log eps| / (1 + |eps e'|)^p.
/// Requires p > 0, eps in (0, 1/2], radius >= 4 / eps (GuardError otherwise).
LemmaCheck eepsum_check(int d, double p, std::span<const int> e_prime, double eps, double radius);

/// rhs of eepsum alone (exposed for the p = d merge check).
double eepsum_rhs(int d, double p, std::span<const int> e_prime, double eps);

enum class Lemma { xesum, eepsum };
std::string_view to_string(Lemma lemma);
Lemma parse_lemma(std::string_view name);  // throws ConfigError

struct ScanGrid {
  int d = 3;
  std::vector<double> eps;
  /// Points are round((t / eps) * dir / |dir|) for t in `scaled_norms`, dir in `directions`.
  std::vector<double> scaled_norms;
  std::vector<std::vector<int>> directions;
  std::vector<double> p_list;       // eepsum only
  double radius_factor = 4.0;       // eepsum radius = radius_factor / eps
};

struct ScanRow {
  double eps = 0.0;
  double p = 0.0;
  double radius = 0.0;
  std::vector<int> point;
  LemmaCheck check;
};

struct BoundScan {
  Lemma lemma = Lemma::xesum;
  int d = 3;
  std::vector<ScanRow> rows;  // grid order: eps, then p, then norm, then direction
  double max_ratio = 0.0;
  std::size_t argmax = 0;
  /// True when the maximizing eps is an endpoint of the eps grid.
  bool max_on_eps_boundary = false;
  /// xesum only: maxima over the near (|e| < 2/eps) and far (|e| > 2/eps) regimes.
  double near_max = 0.0;
  double far_max = 0.0;
};

BoundScan constant_scan(Lemma lemma, const ScanGrid& grid, int threads = 1);

}  // namespace corrlab
