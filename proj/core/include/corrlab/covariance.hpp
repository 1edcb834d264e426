#pragma once

#include <vector>

#include "corrlab/lattice.hpp"
#include "corrlab/scaling_field.hpp"

namespace corrlab {

/// Replica average of the spatial autocorrelation C(x) = L^{-d} sum_y phi(y) phi(y + x).
struct CovarianceTable {
  LatticeShape shape;
  VertexField mean;
  VertexField std_error;
  int n_replicas = 0;
};

/// Streaming accumulator (one autocorrelation per added field, summed in call order).
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(const LatticeShape& shape);
  void add(const VertexField& phi);
  /// Throws PreconditionError with fewer than 2 replicas.
  CovarianceTable table() const;
  int count() const noexcept { return n_; }

 private:
  LatticeShape shape_;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  int n_ = 0;
};

CovarianceTable empirical_covariance(const std::vector<VertexField>& replicas);
CovarianceTable empirical_covariance(const std::vector<CorrectorSolution>& replicas);

struct CovarianceEntry {
  std::vector<int> x;
  double c_hat = 0.0;
  double std_error = 0.0;
};

/// Table rows at the requested displacements (any integer coordinates, taken mod L).
std::vector<CovarianceEntry> covariance_entries(const CovarianceTable& table, const std::vector<std::vector<int>>& x_set);

/// Displacements in the centred domain with r_min <= |x| <= r_max, in vertex order.
std::vector<std::vector<int>> shell_points(const LatticeShape& shape, double r_min, double r_max);

/// Lattice surrogate of the covariance kernel on the torus:
/// K_L(x) = L^{-d} sum_{k != 0} e^{ikx} (s.Qs) / (s.A_h s)^2, s_j = 2 sin(k_j / 2).
VertexField periodic_kernel(const LatticeShape& shape, const CovarianceModel& model);

/// Var(Phi_eps(f_lambda)) predicted by the surrogate kernel on the same torus:
/// sum_{x,y} w(x) w(y) K_L(x - y) with w the field weights.
double sigma2_periodic(const LatticeShape& shape, const CovarianceModel& model, const TestFunction& f,
                       double lambda, double eps);

enum class KernelModel { periodic_lattice, continuum };
enum class FitWeighting { relative, uniform };

struct FitOptions {
  double r_min = 4.0;
  double r_max = 10.0;
  KernelModel model = KernelModel::periodic_lattice;
  FitWeighting weighting = FitWeighting::relative;
  /// Adds a constant to the model (absorbs the zero-mean shift of periodic data
  /// when fitting the continuum kernel).
  bool fit_offset = false;
};

struct QFit {
  CovarianceModel model;
  Eigen::MatrixXd unprojected_Q;
  double offset = 0.0;
  /// Weighted root-mean-square residual over the shell, relative to the
  /// weighted RMS of the data (0 when the data vanish).
  double residual = 0.0;
  int n_points = 0;
  bool projected = false;
};

/// Weighted least squares for symmetric Q (then clipped to PSD) matching the
/// table on r_min <= |x| <= r_max. Requires L >= 32; throws PreconditionError
/// when the shell has too few points for the parameter count.
QFit fit_Q(const CovarianceTable& table, const Eigen::MatrixXd& A_h, const FitOptions& opts = {});

}  // namespace corrlab
