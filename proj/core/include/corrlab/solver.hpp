#pragma once

#include <string_view>

#include "corrlab/environment.hpp"
#include "corrlab/lattice.hpp"

namespace corrlab {

enum class Preconditioner { none, jacobi, constant_coefficient_spectral };

std::string_view to_string(Preconditioner p);
Preconditioner parse_preconditioner(std::string_view name);  // throws ConfigError

struct SolverConfig {
  double rel_tol = 1e-10;
  int max_iter = 2000;
  Preconditioner preconditioner = Preconditioner::constant_coefficient_spectral;

  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  double final_rel_residual = 0.0;
  bool converged = true;
};

struct SolveResult {
  VertexField u;
  SolveReport report;
};

/// Solves (mu + div* A grad) u = g on the torus with preconditioned conjugate
/// gradients. For mu == 0 the right-hand side must have zero mean (relative
/// to its norm, 1e-12) and the returned u has zero mean. A solve that misses
/// its tolerance returns converged == false; callers that need a solution use
/// require_converged().
SolveResult solve(const Environment& env, double mu, const VertexField& g, const SolverConfig& cfg);

/// Same, with raw conductances (used where no Environment exists, e.g. tests).
SolveResult solve(const EdgeField& a, double precond_coefficient, double mu, const VertexField& g,
                  const SolverConfig& cfg);

/// Throws SolverError describing `what` when the report is not converged.
void require_converged(const SolveReport& report, std::string_view what);

/// x -> G(x, head(e)) - G(x, tail(e)) for the Green function of mu + div* A grad.
SolveResult dipole_solve(const Environment& env, const EdgeId& e, double mu, const SolverConfig& cfg);
SolveResult dipole_solve(const Environment& env, std::size_t edge, double mu, const SolverConfig& cfg);

/// Right-hand side delta_{head(e)} - delta_{tail(e)}.
VertexField dipole_rhs(const LatticeShape& shape, std::size_t edge);

inline constexpr std::size_t kDenseOracleMaxVertices = 4096;

/// Direct dense solve (Cholesky). For mu == 0 returns the mean-zero
/// pseudo-inverse solution. Throws GuardError above kDenseOracleMaxVertices.
VertexField dense_oracle_solve(const EdgeField& a, double mu, const VertexField& g);
VertexField dense_oracle_solve(const Environment& env, double mu, const VertexField& g);

}  // namespace corrlab
