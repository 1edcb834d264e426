#include "corrlab/scaling_field.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "corrlab/errors.hpp"
#include "quadrature.hpp"

namespace corrlab {

void CovarianceModel::validate() const {
  const auto d = A_h.rows();
  if (d < 1 || A_h.cols() != d || Q.rows() != d || Q.cols() != d) {
    throw PreconditionError("covariance model matrices must be square and of equal size");
  }
  const double scale_a = std::max(A_h.cwiseAbs().maxCoeff(), 1e-300);
  const double scale_q = std::max(Q.cwiseAbs().maxCoeff(), 1e-300);
  if ((A_h - A_h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale_a) {
    throw PreconditionError("A_h must be symmetric");
  }
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale_q) throw PreconditionError("Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(A_h);
  if (!(ea.eigenvalues().minCoeff() > 0.0)) throw PreconditionError("A_h must be positive definite");
  if (Q.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eq(Q);
    if (eq.eigenvalues().minCoeff() < -1e-12 * scale_q) throw PreconditionError("Q must be positive semi-definite");
  }
}

int minimal_admissible_side(const TestFunction& f, double lambda, double eps) {
  return static_cast<int>(std::floor(2.0 * lambda * f.support_extent() / eps)) + 1;
}

void check_admissible(const LatticeShape& shape, const TestFunction& f, double lambda, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must lie in (0, 1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  if (f.dim() != shape.d) throw PreconditionError("test function and lattice dimensions differ");
  if (!(lambda * f.support_extent() / eps < 0.5 * shape.L)) {
    throw GuardError("support of f_lambda(eps x) overflows the torus: lambda=" + std::to_string(lambda) +
                     ", eps=" + std::to_string(eps) + " needs L >= " +
                     std::to_string(minimal_admissible_side(f, lambda, eps)) + ", have L = " +
                     std::to_string(shape.L));
  }
}

VertexField field_weights(const LatticeShape& shape, const TestFunction& f, double lambda, double eps) {
  check_admissible(shape, f, lambda, eps);
  const double scale = std::pow(eps, 0.5 * shape.d + 1.0);
  VertexField w(shape);
  std::vector<double> y(static_cast<std::size_t>(shape.d));
  for (std::size_t v = 0; v < w.size(); ++v) {
    const auto c = shape.centered_coords(v);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = eps * c[i];
    w.values[v] = scale * f.scaled_value(y, lambda);
  }
  return w;
}

double phi_eps_value(const VertexField& phi, const TestFunction& f, double lambda, double eps) {
  return dot(field_weights(phi.shape, f, lambda, eps), phi);
}

FieldSample phi_eps(const CorrectorSolution& corrector, const TestFunction& f, double lambda, double eps) {
  FieldSample s;
  s.value = phi_eps_value(corrector.phi, f, lambda, eps);
  s.eps = eps;
  s.lambda = lambda;
  s.kind = f.kind();
  s.seed = corrector.env_ref;
  return s;
}

namespace {

double newton_constant(int d) {
  const double dd = static_cast<double>(d);
  return std::tgamma(0.5 * dd - 1.0) / (4.0 * std::pow(std::numbers::pi, 0.5 * dd));
}

Eigen::VectorXd as_vector(std::span<const double> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = x[i];
  return v;
}

void check_point(int d, std::span<const double> x) {
  if (d < 3) throw PreconditionError("continuum kernels require d >= 3");
  if (x.size() != static_cast<std::size_t>(d)) throw PreconditionError("point must have d components");
  for (double c : x) {
    if (c != 0.0) return;
  }
  throw PreconditionError("kernel evaluated at its singularity x = 0");
}

}  // namespace

double homogenized_green(const Eigen::MatrixXd& A_h, std::span<const double> x) {
  const int d = static_cast<int>(A_h.rows());
  check_point(d, x);
  const Eigen::VectorXd v = as_vector(x);
  Eigen::LLT<Eigen::MatrixXd> llt(A_h);
  if (llt.info() != Eigen::Success) throw PreconditionError("A_h must be positive definite");
  const double q = v.dot(llt.solve(v));
  const double sqrt_det = llt.matrixL().toDenseMatrix().diagonal().prod();
  return newton_constant(d) / sqrt_det * std::pow(q, 0.5 * (2.0 - d));
}

double kernel_K(const CovarianceModel& model, std::span<const double> x) {
  const int d = model.dim();
  check_point(d, x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.A_h);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw PreconditionError("A_h must be positive definite");
  const Eigen::MatrixXd inv_sqrt = es.operatorInverseSqrt();
  const double sqrt_det = std::sqrt(es.eigenvalues().prod());
  const Eigen::VectorXd y = inv_sqrt * as_vector(x);
  const Eigen::MatrixXd Qw = inv_sqrt * model.Q * inv_sqrt;
  const double r = y.norm();
  const Eigen::VectorXd yhat = y / r;
  const double angular = Qw.trace() - (d - 2.0) * yhat.dot(Qw * yhat);
  return 0.5 * newton_constant(d) / sqrt_det * std::pow(r, 2.0 - d) * angular;
}

namespace {

/// Product rule on S^{d-1} in hyperspherical angles: Gauss-Legendre in the
/// polar angles, trapezoid in the azimuth. Calls fn(omega, weight).
template <typename Fn>
void sphere_rule(int d, int polar_panels, int azimuth_points, Fn&& fn) {
  const auto polar = detail::composite_gauss(0.0, std::numbers::pi, polar_panels);
  const int n_polar = d - 2;
  const std::size_t np = polar.nodes.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(std::max(n_polar, 0)), 0);
  std::vector<double> omega(static_cast<std::size_t>(d));
  const double dphi = 2.0 * std::numbers::pi / azimuth_points;
  for (;;) {
    double weight = 1.0;
    double sin_prod = 1.0;
    for (int j = 0; j < n_polar; ++j) {
      const double t = polar.nodes[idx[static_cast<std::size_t>(j)]];
      omega[static_cast<std::size_t>(j)] = sin_prod * std::cos(t);
      weight *= polar.weights[idx[static_cast<std::size_t>(j)]] * std::pow(std::sin(t), d - 2 - j);
      sin_prod *= std::sin(t);
    }
    for (int k = 0; k < azimuth_points; ++k) {
      const double phi = (k + 0.5) * dphi;
      omega[static_cast<std::size_t>(d - 2)] = sin_prod * std::cos(phi);
      omega[static_cast<std::size_t>(d - 1)] = sin_prod * std::sin(phi);
      fn(std::span<const double>(omega), weight * dphi);
    }
    int j = n_polar - 1;
    while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == np) idx[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
  }
}

double angular_factor(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q, std::span<const double> w) {
  const Eigen::Map<const Eigen::VectorXd> v(w.data(), static_cast<Eigen::Index>(w.size()));
  const double a = v.dot(A * v);
  return v.dot(Q * v) / (a * a);
}

double sigma2_once(const CovarianceModel& model, const TestFunction& f, double lambda, double cutoff,
                   int refine) {
  const int d = model.dim();
  const double dd = static_cast<double>(d);
  const double pmax = cutoff / lambda;
  const double norm = std::pow(2.0 * std::numbers::pi, -dd);
  const int polar_panels = (d <= 3 ? 4 : 2) * refine;
  const int azimuth = (d <= 3 ? 64 : 32) * refine;

  if (f.kind() == TestFunctionKind::mollifier_bump) {
    double angular = 0.0;
    sphere_rule(d, polar_panels, azimuth, [&](std::span<const double> w, double weight) {
      angular += weight * angular_factor(model.A_h, model.Q, w);
    });
    // Radial transform oscillates with period ~ 2 pi lambda; one panel per unit of lambda rho.
    const auto radial = detail::composite_gauss(0.0, pmax, static_cast<int>(std::ceil(cutoff)) * refine);
    double rad = 0.0;
    for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
      const double rho = radial.nodes[i];
      const double fh = f.radial_fourier(lambda * rho);
      rad += radial.weights[i] * std::pow(rho, dd - 3.0) * fh * fh;
    }
    return norm * angular * rad;
  }

  // Product bump: the transform is not radial; integrate the full product grid.
  // Its oscillation period in rho is 2 pi sqrt(d) / lambda, so panels are wider.
  const double pmax_p = pmax * std::sqrt(dd);
  const auto radial = detail::composite_gauss(0.0, pmax_p, static_cast<int>(std::ceil(cutoff / 8.0)) * refine);
  std::vector<double> dirs;
  std::vector<double> dir_weights;
  sphere_rule(d, 2 * refine, 32 * refine, [&](std::span<const double> w, double weight) {
    const double a = angular_factor(model.A_h, model.Q, w);
    if (a == 0.0) return;
    dirs.insert(dirs.end(), w.begin(), w.end());
    dir_weights.push_back(weight * a);
  });
  std::vector<double> p(static_cast<std::size_t>(d));
  double total = 0.0;
  for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
    const double rho = radial.nodes[i];
    double shell = 0.0;
    for (std::size_t k = 0; k < dir_weights.size(); ++k) {
      for (std::size_t j = 0; j < p.size(); ++j) p[j] = lambda * rho * dirs[k * p.size() + j];
      shell += dir_weights[k] * f.fourier_abs2(p);
    }
    total += radial.weights[i] * std::pow(rho, dd - 3.0) * shell;
  }
  return norm * total;
}

}  // namespace

Sigma2Result sigma2(const CovarianceModel& model, const TestFunction& f, double lambda, const Sigma2Options& opts) {
  model.validate();
  if (model.dim() < 3) throw PreconditionError("sigma2 requires d >= 3");
  if (f.dim() != model.dim()) throw PreconditionError("test function and model dimensions differ");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (model.Q.cwiseAbs().maxCoeff() == 0.0) return {};
  const double coarse = sigma2_once(model, f, lambda, opts.cutoff, 1);
  const double fine = sigma2_once(model, f, lambda, opts.cutoff, 2);
  Sigma2Result r{fine, std::abs(fine - coarse)};
  if (r.quad_err > opts.max_rel_error * std::abs(fine)) {
    throw AccuracyError("sigma2 quadrature did not converge", r.quad_err);
  }
  return r;
}

}  // namespace corrlab
