#include "corrlab/covariance.hpp"

#include <cmath>
#include <string>

#include "corrlab/errors.hpp"
#include "corrlab/spectral.hpp"

namespace corrlab {

CovarianceAccumulator::CovarianceAccumulator(const LatticeShape& shape)
    : shape_(shape), sum_(shape.num_vertices(), 0.0), sum_sq_(shape.num_vertices(), 0.0) {}

void CovarianceAccumulator::add(const VertexField& phi) {
  if (!(phi.shape == shape_)) throw PreconditionError("replica lives on a different lattice");
  const VertexField c = autocorrelation(phi);
  for (std::size_t i = 0; i < c.size(); ++i) {
    sum_[i] += c.values[i];
    sum_sq_[i] += c.values[i] * c.values[i];
  }
  ++n_;
}

CovarianceTable CovarianceAccumulator::table() const {
  if (n_ < 2) throw PreconditionError("empirical covariance needs >= 2 replicas");
  CovarianceTable t{shape_, VertexField(shape_), VertexField(shape_), n_};
  const double n = n_;
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    const double m = sum_[i] / n;
    const double var = std::max(0.0, (sum_sq_[i] - n * m * m) / (n - 1.0));
    t.mean.values[i] = m;
    t.std_error.values[i] = std::sqrt(var / n);
  }
  return t;
}

CovarianceTable empirical_covariance(const std::vector<VertexField>& replicas) {
  if (replicas.size() < 2) throw PreconditionError("empirical covariance needs >= 2 replicas");
  CovarianceAccumulator acc(replicas.front().shape);
  for (const auto& r : replicas) acc.add(r);
  return acc.table();
}

CovarianceTable empirical_covariance(const std::vector<CorrectorSolution>& replicas) {
  if (replicas.size() < 2) throw PreconditionError("empirical covariance needs >= 2 replicas");
  CovarianceAccumulator acc(replicas.front().phi.shape);
  for (const auto& r : replicas) acc.add(r.phi);
  return acc.table();
}

std::vector<CovarianceEntry> covariance_entries(const CovarianceTable& table,
                                                const std::vector<std::vector<int>>& x_set) {
  std::vector<CovarianceEntry> out;
  out.reserve(x_set.size());
  for (const auto& x : x_set) {
    const std::size_t v = table.shape.vertex_index(x);
    out.push_back({x, table.mean.values[v], table.std_error.values[v]});
  }
  return out;
}

std::vector<std::vector<int>> shell_points(const LatticeShape& shape, double r_min, double r_max) {
  std::vector<std::vector<int>> out;
  for (std::size_t v = 0; v < shape.num_vertices(); ++v) {
    auto c = shape.centered_coords(v);
    double r2 = 0.0;
    for (int x : c) r2 += static_cast<double>(x) * x;
    const double r = std::sqrt(r2);
    if (r >= r_min && r <= r_max) out.push_back(std::move(c));
  }
  return out;
}

VertexField periodic_kernel(const LatticeShape& shape, const CovarianceModel& model) {
  if (model.dim() != shape.d) throw PreconditionError("model and lattice dimensions differ");
  TorusFFT fft(shape);
  const auto d = static_cast<Eigen::Index>(shape.d);
  Eigen::VectorXd s(d);
  auto symbol = tabulate_symbol(fft, [&](std::span<const double> theta) {
    for (Eigen::Index i = 0; i < d; ++i) s(i) = 2.0 * std::sin(0.5 * theta[static_cast<std::size_t>(i)]);
    const double a = s.dot(model.A_h * s);
    return a > 0.0 ? s.dot(model.Q * s) / (a * a) : 0.0;
  });
  symbol[0] = 0.0;
  VertexField k(shape);
  fft.synthesize(symbol, k.values);
  return k;
}

double sigma2_periodic(const LatticeShape& shape, const CovarianceModel& model, const TestFunction& f,
                       double lambda, double eps) {
  model.validate();
  const VertexField w = field_weights(shape, f, lambda, eps);
  const auto d = static_cast<Eigen::Index>(shape.d);
  Eigen::VectorXd s(d);
  return spectral_quadratic_form(w, [&](std::span<const double> theta) {
    for (Eigen::Index i = 0; i < d; ++i) s(i) = 2.0 * std::sin(0.5 * theta[static_cast<std::size_t>(i)]);
    const double a = s.dot(model.A_h * s);
    return a > 0.0 ? s.dot(model.Q * s) / (a * a) : 0.0;
  });
}

namespace {

Eigen::MatrixXd basis_matrix(int d, int m) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(d, d);
  int idx = 0;
  for (int j = 0; j < d; ++j) {
    for (int k = j; k < d; ++k, ++idx) {
      if (idx == m) {
        E(j, k) = 1.0;
        E(k, j) = 1.0;
        return E;
      }
    }
  }
  return E;
}

}  // namespace

QFit fit_Q(const CovarianceTable& table, const Eigen::MatrixXd& A_h, const FitOptions& opts) {
  const LatticeShape& shape = table.shape;
  const int d = shape.d;
  if (shape.L < 32) throw GuardError("fit_Q needs a covariance table with L >= 32");
  if (A_h.rows() != d || A_h.cols() != d) throw PreconditionError("A_h has the wrong size");
  if (!(opts.r_min > 0.0 && opts.r_max >= opts.r_min)) throw ConfigError("fit shell needs 0 < r_min <= r_max");

  const int n_sym = d * (d + 1) / 2;
  const int n_par = n_sym + (opts.fit_offset ? 1 : 0);
  const auto points = shell_points(shape, opts.r_min, opts.r_max);
  const int n_pts = static_cast<int>(points.size());
  if (n_pts < 2 * n_par) {
    throw PreconditionError("fit_Q underdetermined: " + std::to_string(n_pts) + " points for " +
                            std::to_string(n_par) + " parameters");
  }

  // Basis kernels, one per symmetric-matrix coordinate (the model is linear in Q).
  std::vector<VertexField> periodic_basis;
  if (opts.model == KernelModel::periodic_lattice) {
    for (int m = 0; m < n_sym; ++m) periodic_basis.push_back(periodic_kernel(shape, {A_h, basis_matrix(d, m)}));
  }
  Eigen::MatrixXd X(n_pts, n_par);
  Eigen::VectorXd y(n_pts);
  std::vector<double> xd(static_cast<std::size_t>(d));
  for (int i = 0; i < n_pts; ++i) {
    const auto& x = points[static_cast<std::size_t>(i)];
    double r2 = 0.0;
    for (int c : x) r2 += static_cast<double>(c) * c;
    const double w = opts.weighting == FitWeighting::relative ? std::pow(r2, 0.5 * (d - 2)) : 1.0;
    const std::size_t v = shape.vertex_index(x);
    for (int m = 0; m < n_sym; ++m) {
      double b;
      if (opts.model == KernelModel::periodic_lattice) {
        b = periodic_basis[static_cast<std::size_t>(m)].values[v];
      } else {
        for (std::size_t j = 0; j < xd.size(); ++j) xd[j] = x[j];
        b = kernel_K({A_h, basis_matrix(d, m)}, xd);
      }
      X(i, m) = w * b;
    }
    if (opts.fit_offset) X(i, n_sym) = w;
    y(i) = w * table.mean.values[v];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < n_par) throw PreconditionError("fit_Q design matrix is rank deficient");
  const Eigen::VectorXd theta = qr.solve(y);

  QFit fit;
  fit.n_points = n_pts;
  fit.unprojected_Q = Eigen::MatrixXd::Zero(d, d);
  for (int m = 0; m < n_sym; ++m) fit.unprojected_Q += theta(m) * basis_matrix(d, m);
  // Off-diagonal basis elements carry both (j,k) and (k,j); diagonal ones count once.
  fit.offset = opts.fit_offset ? theta(n_sym) : 0.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.unprojected_Q);
  Eigen::VectorXd ev = es.eigenvalues();
  fit.projected = ev.minCoeff() < 0.0;
  ev = ev.cwiseMax(0.0);
  fit.model.A_h = A_h;
  fit.model.Q = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  fit.model.Q = 0.5 * (fit.model.Q + fit.model.Q.transpose());

  const double y_norm = y.norm();
  fit.residual = y_norm > 0.0 ? (X * theta - y).norm() / y_norm : 0.0;
  return fit;
}

}  // namespace corrlab
