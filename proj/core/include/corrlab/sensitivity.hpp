#pragma once

#include <optional>
#include <vector>

#include "corrlab/corrector.hpp"
#include "corrlab/gauss_stats.hpp"
#include "corrlab/scaling_field.hpp"

namespace corrlab {

/// Derivatives of a linear functional <w, phi> of the corrector with respect
/// to the Gaussian drivers. Order 1: one value per edge e. Order 2: the row
/// e -> d_{e'} d_e for the anchor e'.
struct DerivativeField {
  int order = 1;
  std::optional<std::size_t> anchor;
  EdgeField values;
};

/// Adjoint state u = (mu + div* A grad)^{-1} w (w projected to mean zero when
/// mu == 0), so that d_e <w, phi> = -a'(zeta_e) (grad phi + xi)(e) grad u(e).
/// Throws SolverError on non-convergence.
VertexField adjoint_from_weights(const Environment& env, double mu, const VertexField& w, const SolverConfig& cfg);

/// Adjoint for Phi_eps(f_lambda): weights eps^{d/2+1} f_lambda(eps x).
VertexField adjoint_field(const Environment& env, const TestFunction& f, double lambda, double eps,
                          const SolverConfig& cfg, double mu = 0.0);

/// Adjoint for the point value phi(x): a column of the Green function.
VertexField point_adjoint(const Environment& env, std::size_t vertex, const SolverConfig& cfg, double mu = 0.0);

/// d_e <w, phi> = -a'(zeta_e) (grad phi(e) + xi_e) grad u(e) for every edge.
DerivativeField first_derivatives_all_edges(const Environment& env, const CorrectorSolution& corrector,
                                            const VertexField& u);

/// Row e -> d_{e'} d_e <w, phi> for the anchor e'. `dipole` is the field
/// x -> G(x, head(e')) - G(x, tail(e')) (see dipole_solve). For e != e':
///   a'(e) a'(e') [grad u(e) M(e) g(e') + grad u(e') M(e) g(e)],
/// with g = grad phi + xi and M = grad(dipole); on the diagonal
///   2 a'(e')^2 grad u(e') M(e') g(e') - a''(e') grad u(e') g(e').
DerivativeField second_derivative_row(const Environment& env, const CorrectorSolution& corrector,
                                      const VertexField& u, std::size_t anchor, const VertexField& dipole);

/// Same, performing the dipole solve for the anchor.
DerivativeField second_derivative_row(const Environment& env, const CorrectorSolution& corrector,
                                      const VertexField& u, std::size_t anchor, const SolverConfig& cfg);

/// Euclidean distance between the midpoints of two edges (minimum image).
double edge_distance(const LatticeShape& shape, std::size_t e1, std::size_t e2);
/// Distance from a vertex to the midpoint of an edge (minimum image).
double vertex_edge_distance(const LatticeShape& shape, std::size_t v, std::size_t e);

struct DecayBin {
  double r = 0.0;          // mean separation of the bin members
  double rms = 0.0;        // <|field|^2>^{1/2} over members and replicas
  double std_error = 0.0;  // of rms, from the spread across replicas
  int count = 0;           // members per replica
};

/// Bins of unit width centred on integer separations.
class DecayAccumulator {
 public:
  explicit DecayAccumulator(double max_r);
  /// One replica: separation and value per point.
  void add_replica(std::span<const double> r, std::span<const double> values);
  std::vector<DecayBin> bins() const;
  int replicas() const noexcept { return n_; }

 private:
  std::vector<double> r_sum_;
  std::vector<int> count_;
  std::vector<double> ms_sum_;     // sum over replicas of the replica's bin mean square
  std::vector<double> ms_sq_sum_;
  int n_ = 0;
};

struct ExponentFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n_bins = 0;
  double r_min = 0.0;
  double r_max = 0.0;
  FitStatus status = FitStatus::inconclusive;
};

/// Log-log OLS of rms against r over bins with r_min <= r <= r_max and rms > 0.
ExponentFit fit_power_law(const std::vector<DecayBin>& bins, double r_min, double r_max);

struct DecayStudyConfig {
  LatticeShape shape{3, 32};
  ConductanceLaw law;
  std::vector<double> xi{1.0, 0.0, 0.0};
  int n_replicas = 64;
  std::uint64_t master_seed = 0;
  SolverConfig solver;
  int threads = 1;
};

struct DecayStudy {
  /// |d_e phi(x)| against |x - e| for the anchor edge at the origin along axis 1.
  std::vector<DecayBin> first;
  /// |d_{e'} d_e phi(x)| against |e - e'| with x the base point of e'.
  std::vector<DecayBin> second;
  ExponentFit first_fit;
  ExponentFit second_fit;
};

/// Fits over 2 <= r <= L/4. Requires >= 16 replicas; a lattice too small for
/// three bins gives inconclusive fits.
DecayStudy decay_study(const DecayStudyConfig& cfg);

}  // namespace corrlab
