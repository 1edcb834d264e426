#pragma once

#include <Eigen/Dense>
#include <span>

#include "corrlab/corrector.hpp"
#include "corrlab/lattice.hpp"
#include "corrlab/test_function.hpp"

namespace corrlab {

/// Pair (A_h, Q) defining the covariance kernel and limit variance.
struct CovarianceModel {
  Eigen::MatrixXd A_h;
  Eigen::MatrixXd Q;

  int dim() const noexcept { return static_cast<int>(A_h.rows()); }
  /// Throws PreconditionError unless both are symmetric, A_h positive definite
  /// and Q positive semi-definite (relative tolerance 1e-12).
  void validate() const;
};

/// Smallest torus side L for which x -> eps x maps a neighbourhood of the
/// support of f_lambda into the centred fundamental domain.
int minimal_admissible_side(const TestFunction& f, double lambda, double eps);

/// Throws GuardError (naming the minimal L) unless lambda * extent / eps < L / 2.
void check_admissible(const LatticeShape& shape, const TestFunction& f, double lambda, double eps);

/// w(x) = eps^{d/2+1} f_lambda(eps x) over the centred fundamental domain, so
/// that Phi_eps(f_lambda) = <w, phi>.
VertexField field_weights(const LatticeShape& shape, const TestFunction& f, double lambda, double eps);

struct FieldSample {
  double value = 0.0;
  double eps = 0.0;
  double lambda = 1.0;
  TestFunctionKind kind = TestFunctionKind::mollifier_bump;
  SeedSpec seed;
};

/// Phi_eps(f_lambda) = eps^{d/2+1} sum_x f_lambda(eps x) phi(x).
double phi_eps_value(const VertexField& phi, const TestFunction& f, double lambda, double eps);
FieldSample phi_eps(const CorrectorSolution& corrector, const TestFunction& f, double lambda, double eps);

/// Green function of -div A_h grad on R^d, d >= 3:
/// Gamma(d/2 - 1) / (4 pi^{d/2} sqrt(det A_h)) (x . A_h^{-1} x)^{(2-d)/2}.
double homogenized_green(const Eigen::MatrixXd& A_h, std::span<const double> x);

/// Covariance kernel K(x) = (2 pi)^{-d} integral e^{ipx} (p.Qp) / (p.A_h p)^2 dp.
/// Evaluated in closed form: with y = A_h^{-1/2} x and Qw = A_h^{-1/2} Q A_h^{-1/2},
/// K(x) = c_d / (2 sqrt(det A_h)) |y|^{2-d} (tr Qw - (d-2) yhat.Qw yhat),
/// c_d = Gamma(d/2 - 1) / (4 pi^{d/2}).
double kernel_K(const CovarianceModel& model, std::span<const double> x);

struct Sigma2Options {
  /// Radial cutoff |p| <= cutoff / lambda (the transform has decayed below 1e-15 there).
  double cutoff = 400.0;
  /// Relative discrepancy between the base and doubled grids above which
  /// AccuracyError is thrown.
  double max_rel_error = 1e-6;
};

struct Sigma2Result {
  double value = 0.0;
  double quad_err = 0.0;
};

/// sigma^2(f_lambda) = (2 pi)^{-d} integral |f_lambda^(p)|^2 (p.Qp) / (p.A_h p)^2 dp, by
/// radial x angular Gauss-Legendre quadrature; quad_err is the difference to
/// the same rule with every grid refined twofold.
Sigma2Result sigma2(const CovarianceModel& model, const TestFunction& f, double lambda,
                    const Sigma2Options& opts = {});

}  // namespace corrlab
