#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "corrlab/lattice.hpp"

namespace corrlab {

enum class LawKind { tanh, affine_clamped_smooth };

std::string_view to_string(LawKind kind);
LawKind parse_law_kind(std::string_view name);  // throws ConfigError

/// Smooth bounded map from the Gaussian driver to the conductance.
///
///  - tanh:  a(z) = (lo + hi)/2 + (hi - lo)/2 * tanh(z)
///  - affine_clamped_smooth: a(z) = lo + (hi - lo) * S((z + w) / (2w)), where
///    S is the quintic smoothstep clamped to [0, 1] (C^2), w = ramp_half_width.
///
/// lambda_min == lambda_max is accepted and yields the constant law.
struct ConductanceLaw {
  LawKind kind = LawKind::tanh;
  double lambda_min = 1.0;
  double lambda_max = 4.0;
  double ramp_half_width = 2.0;

  void validate() const;

  /// a(z), a'(z) or a''(z) for order 0, 1, 2.
  double eval(double z, int order) const;

  /// Closed-form sup norms of a' and a''.
  double sup_first_derivative() const;
  double sup_second_derivative() const;

  /// Coefficient of the constant-coefficient preconditioner: sqrt(lo * hi).
  double geometric_mean() const;

  bool is_constant() const noexcept { return lambda_min == lambda_max; }
};

/// law_eval in free-function form.
double law_eval(const ConductanceLaw& law, double z, int order);

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint32_t replica_index = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// Standard normal driver for edge `edge` of the replica named by `seed`.
/// Counter = (edge lo, edge hi, replica, stream tag), key = master seed.
double gaussian_driver(const SeedSpec& seed, std::uint64_t edge);

struct Environment {
  LatticeShape shape;
  EdgeField zeta;
  EdgeField a;
  ConductanceLaw law;
  SeedSpec seed;

  /// a'(zeta_e) or a''(zeta_e) on every edge.
  EdgeField law_derivative(int order) const;

  /// Hash of the conductance bytes; identifies an environment across objects.
  std::uint64_t fingerprint() const;
};

Environment sample_environment(const LatticeShape& shape, const ConductanceLaw& law,
                               const SeedSpec& seed);

/// Environment with the conductances `a` built directly from a driver field.
Environment make_environment(EdgeField zeta, const ConductanceLaw& law, const SeedSpec& seed);

/// Copy of env with zeta_e += h and a(e) recomputed; other edges untouched.
Environment perturb_edge(const Environment& env, std::size_t edge, double h);
Environment perturb_edge(const Environment& env, const EdgeId& edge, double h);

/// Writes <stem>.zeta.bin, <stem>.a.bin and a JSON sidecar <stem>.json.
void save_environment(const std::filesystem::path& dir, const std::string& stem, const Environment& env);
Environment load_environment(const std::filesystem::path& dir, const std::string& stem);

}  // namespace corrlab
