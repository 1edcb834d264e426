#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "corrlab/environment.hpp"
#include "corrlab/solver.hpp"

namespace corrlab {

/// Periodic (optionally massive) corrector for direction xi:
/// (mu + div* A grad) phi = -div*(A lift(xi)), mean-zero gauge when mu == 0.
struct CorrectorSolution {
  std::vector<double> xi;
  double mu = 0.0;
  VertexField phi;
  /// |mu phi + div* A (lift(xi) + grad phi)| / |div*(A lift(xi))|, 0 when the
  /// denominator vanishes (constant coefficients).
  double residual = 0.0;
  SeedSpec env_ref;
  std::uint64_t env_fingerprint = 0;
  SolveReport report;

  /// grad phi (e) + xi_{axis(e)}.
  EdgeField corrected_gradient() const;
};

/// Throws SolverError when the solve does not converge.
CorrectorSolution solve_corrector(const Environment& env, std::span<const double> xi, double mu,
                                  const SolverConfig& cfg);

/// Correctors for the d basis directions.
std::vector<CorrectorSolution> solve_basis_correctors(const Environment& env, double mu,
                                                      const SolverConfig& cfg);

/// Spatial estimator: entry (j, k) = L^{-d} sum_e (e_j + grad phi_j)(e) a(e) (e_k + grad phi_k)(e),
/// symmetrized. `correctors` must be the basis correctors of `env`.
Eigen::MatrixXd effective_matrix(const Environment& env, const std::vector<CorrectorSolution>& correctors);

struct EffectiveMatrix {
  Eigen::MatrixXd A_h;
  Eigen::MatrixXd std_error;
  int n_replicas = 0;
  std::vector<Eigen::MatrixXd> per_replica;
};

/// Mean and standard error over replicas of the per-replica effective matrix.
EffectiveMatrix ensemble_effective_matrix(const LatticeShape& shape, const ConductanceLaw& law,
                                          const std::vector<SeedSpec>& seeds, const SolverConfig& cfg,
                                          int threads = 1);

/// <stem>.phi.bin plus <stem>.json (xi, mu, residual, seed).
void save_corrector(const std::filesystem::path& dir, const std::string& stem, const CorrectorSolution& c);
CorrectorSolution load_corrector(const std::filesystem::path& dir, const std::string& stem);

}  // namespace corrlab
