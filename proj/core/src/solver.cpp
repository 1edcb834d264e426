#include "corrlab/solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <optional>
#include <string>

#include "corrlab/errors.hpp"
#include "corrlab/spectral.hpp"

namespace corrlab {

std::string_view to_string(Preconditioner p) {
  switch (p) {
    case Preconditioner::none:
      return "none";
    case Preconditioner::jacobi:
      return "jacobi";
    case Preconditioner::constant_coefficient_spectral:
      return "constant_coefficient_spectral";
  }
  return "unknown";
}

Preconditioner parse_preconditioner(std::string_view name) {
  if (name == "none") return Preconditioner::none;
  if (name == "jacobi") return Preconditioner::jacobi;
  if (name == "constant_coefficient_spectral") return Preconditioner::constant_coefficient_spectral;
  throw ConfigError("unknown preconditioner '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (!(rel_tol > 0.0)) throw ConfigError("solver rel_tol must be > 0");
  if (max_iter < 1) throw ConfigError("solver max_iter must be >= 1");
}

namespace {

class PreconditionerOp {
 public:
  PreconditionerOp(const EdgeField& a, double coefficient, double mu, Preconditioner kind)
      : kind_(kind) {
    const LatticeShape& shape = a.shape;
    if (kind == Preconditioner::jacobi) {
      inv_diag_.assign(shape.num_vertices(), mu);
      const auto d = static_cast<std::size_t>(shape.d);
      for (std::size_t v = 0; v < shape.num_vertices(); ++v) {
        for (int i = 0; i < shape.d; ++i) {
          const double c = a.values[v * d + static_cast<std::size_t>(i)];
          inv_diag_[v] += c;
          inv_diag_[shape.forward_neighbor(v, i)] += c;
        }
      }
      for (double& x : inv_diag_) x = 1.0 / x;
    } else if (kind == Preconditioner::constant_coefficient_spectral) {
      spectral_.emplace(shape, mu, coefficient);
    }
  }

  void apply(std::span<const double> r, std::span<double> z) {
    switch (kind_) {
      case Preconditioner::none:
        std::copy(r.begin(), r.end(), z.begin());
        break;
      case Preconditioner::jacobi:
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
        break;
      case Preconditioner::constant_coefficient_spectral:
        spectral_->apply(r, z);
        break;
    }
  }

 private:
  Preconditioner kind_;
  std::vector<double> inv_diag_;
  std::optional<SpectralPreconditioner> spectral_;
};

}  // namespace

SolveResult solve(const EdgeField& a, double precond_coefficient, double mu, const VertexField& g,
                  const SolverConfig& cfg) {
  cfg.validate();
  if (!(mu >= 0.0)) throw PreconditionError("mass term mu must be >= 0");
  if (!(a.shape == g.shape)) throw PreconditionError("right-hand side lives on a different lattice");

  const LatticeShape& shape = g.shape;
  const std::size_t n = shape.num_vertices();
  std::vector<double> b = g.values;
  const double g_norm = norm2(b);
  const bool singular = mu == 0.0;

  SolveResult result{VertexField(shape), SolveReport{}};
  if (g_norm == 0.0) return result;

  if (singular) {
    double s = 0.0;
    for (double x : b) s += x;
    const double mean = s / static_cast<double>(n);
    if (std::abs(mean) * std::sqrt(static_cast<double>(n)) > 1e-12 * g_norm) {
      throw PreconditionError("mu = 0 requires a mean-zero right-hand side (mean = " +
                              std::to_string(mean) + ")");
    }
    project_mean_zero(b);
  }
  const double b_norm = norm2(b);
  if (b_norm == 0.0) return result;

  PreconditionerOp precond(a, precond_coefficient, mu, cfg.preconditioner);
  std::vector<double>& x = result.u.values;
  std::vector<double> r = b, z(n), p(n), q(n);

  int iterations = 0;
  double rel = 1.0;
  // Outer loop restarts from the true residual whenever the recursive
  // residual claims convergence but the certificate does not.
  while (iterations < cfg.max_iter) {
    precond.apply(r, z);
    if (singular) project_mean_zero(z);
    p = z;
    double rz = dot(r, z);
    while (iterations < cfg.max_iter) {
      apply_operator_into(a, mu, p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      ++iterations;
      if (norm2(r) <= cfg.rel_tol * b_norm) break;
      precond.apply(r, z);
      if (singular) project_mean_zero(z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    if (singular) project_mean_zero(x);
    apply_operator_into(a, mu, x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    rel = norm2(r) / b_norm;
    if (rel <= cfg.rel_tol) break;
    if (rel < 1e-15 * 16) break;  // at roundoff; further restarts cannot help
  }

  result.report.iterations = iterations;
  result.report.final_rel_residual = rel;
  result.report.converged = rel <= cfg.rel_tol;
  return result;
}

SolveResult solve(const Environment& env, double mu, const VertexField& g, const SolverConfig& cfg) {
  return solve(env.a, env.law.geometric_mean(), mu, g, cfg);
}

void require_converged(const SolveReport& report, std::string_view what) {
  if (!report.converged) {
    throw SolverError(std::string(what) + ": no convergence after " + std::to_string(report.iterations) +
                      " iterations (relative residual " + std::to_string(report.final_rel_residual) + ")");
  }
}

VertexField dipole_rhs(const LatticeShape& shape, std::size_t edge) {
  const auto d = static_cast<std::size_t>(shape.d);
  const std::size_t tail = edge / d;
  const std::size_t head = shape.forward_neighbor(tail, static_cast<int>(edge % d));
  VertexField g(shape);
  g.values[head] += 1.0;
  g.values[tail] -= 1.0;
  return g;
}

SolveResult dipole_solve(const Environment& env, std::size_t edge, double mu, const SolverConfig& cfg) {
  if (edge >= env.shape.num_edges()) throw PreconditionError("edge index out of range");
  return solve(env, mu, dipole_rhs(env.shape, edge), cfg);
}

SolveResult dipole_solve(const Environment& env, const EdgeId& e, double mu, const SolverConfig& cfg) {
  return dipole_solve(env, e.index(env.shape), mu, cfg);
}

VertexField dense_oracle_solve(const EdgeField& a, double mu, const VertexField& g) {
  const LatticeShape& shape = g.shape;
  const std::size_t n = shape.num_vertices();
  if (n > kDenseOracleMaxVertices) {
    throw GuardError("dense oracle limited to " + std::to_string(kDenseOracleMaxVertices) +
                     " vertices, lattice has " + std::to_string(n));
  }
  if (!(mu >= 0.0)) throw PreconditionError("mass term mu must be >= 0");
  const auto d = static_cast<std::size_t>(shape.d);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t v = 0; v < n; ++v) {
    M(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v)) += mu;
    for (int i = 0; i < shape.d; ++i) {
      const auto w = static_cast<Eigen::Index>(shape.forward_neighbor(v, i));
      const auto vi = static_cast<Eigen::Index>(v);
      const double c = a.values[v * d + static_cast<std::size_t>(i)];
      M(vi, vi) += c;
      M(w, w) += c;
      M(vi, w) -= c;
      M(w, vi) -= c;
    }
  }
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(g.values.data(), static_cast<Eigen::Index>(n));
  if (mu == 0.0) {
    // Constants span the kernel; adding J/N makes the matrix definite without
    // changing the solution on mean-zero data.
    rhs.array() -= rhs.mean();
    M.array() += 1.0 / static_cast<double>(n);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw SolverError("dense oracle: matrix not positive definite");
  Eigen::VectorXd x = llt.solve(rhs);
  if (mu == 0.0) x.array() -= x.mean();
  return VertexField(shape, std::vector<double>(x.data(), x.data() + x.size()));
}

VertexField dense_oracle_solve(const Environment& env, double mu, const VertexField& g) {
  return dense_oracle_solve(env.a, mu, g);
}

}  // namespace corrlab
