#include "corrlab/corrector.hpp"

#include <cmath>
#include <fstream>

#include "corrlab/errors.hpp"
#include "corrlab/field_io.hpp"
#include "corrlab/parallel.hpp"
#include "json.hpp"

namespace corrlab {

EdgeField CorrectorSolution::corrected_gradient() const {
  EdgeField g = gradient(phi);
  const auto d = static_cast<std::size_t>(phi.shape.d);
  for (std::size_t e = 0; e < g.size(); ++e) g.values[e] += xi[e % d];
  return g;
}

CorrectorSolution solve_corrector(const Environment& env, std::span<const double> xi, double mu,
                                  const SolverConfig& cfg) {
  if (xi.size() != static_cast<std::size_t>(env.shape.d)) {
    throw PreconditionError("direction xi must have d components");
  }
  EdgeField flux = lift_vector(env.shape, xi);
  for (std::size_t e = 0; e < flux.size(); ++e) flux.values[e] *= env.a.values[e];
  VertexField rhs = divergence(flux);
  for (double& x : rhs.values) x = -x;

  SolveResult sr = solve(env, mu, rhs, cfg);
  require_converged(sr.report, "corrector solve");

  CorrectorSolution out;
  out.xi.assign(xi.begin(), xi.end());
  out.mu = mu;
  out.phi = std::move(sr.u);
  out.env_ref = env.seed;
  out.env_fingerprint = env.fingerprint();
  out.report = sr.report;

  const double denom = norm2(rhs.values);
  if (denom > 0.0) {
    VertexField r = apply_operator(env.a, mu, out.phi);
    for (std::size_t i = 0; i < r.size(); ++i) r.values[i] -= rhs.values[i];
    out.residual = norm2(r.values) / denom;
  }
  return out;
}

std::vector<CorrectorSolution> solve_basis_correctors(const Environment& env, double mu,
                                                      const SolverConfig& cfg) {
  std::vector<CorrectorSolution> out;
  std::vector<double> xi(static_cast<std::size_t>(env.shape.d), 0.0);
  for (int j = 0; j < env.shape.d; ++j) {
    std::fill(xi.begin(), xi.end(), 0.0);
    xi[static_cast<std::size_t>(j)] = 1.0;
    out.push_back(solve_corrector(env, xi, mu, cfg));
  }
  return out;
}

Eigen::MatrixXd effective_matrix(const Environment& env, const std::vector<CorrectorSolution>& correctors) {
  const int d = env.shape.d;
  if (correctors.size() != static_cast<std::size_t>(d)) {
    throw PreconditionError("effective matrix needs one corrector per basis direction");
  }
  const std::uint64_t fp = env.fingerprint();
  std::vector<EdgeField> grads;
  for (int j = 0; j < d; ++j) {
    const auto& c = correctors[static_cast<std::size_t>(j)];
    if (!(c.phi.shape == env.shape) || c.env_fingerprint != fp || !(c.env_ref == env.seed)) {
      throw PreconditionError("corrector was computed on a different environment");
    }
    for (int k = 0; k < d; ++k) {
      if (c.xi[static_cast<std::size_t>(k)] != (j == k ? 1.0 : 0.0)) {
        throw PreconditionError("correctors must be ordered along the basis e_1..e_d");
      }
    }
    grads.push_back(c.corrected_gradient());
  }
  const double n = static_cast<double>(env.shape.num_vertices());
  Eigen::MatrixXd A(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = j; k < d; ++k) {
      const auto& gj = grads[static_cast<std::size_t>(j)].values;
      const auto& gk = grads[static_cast<std::size_t>(k)].values;
      double s = 0.0;
      for (std::size_t e = 0; e < gj.size(); ++e) s += gj[e] * env.a.values[e] * gk[e];
      A(j, k) = s / n;
    }
  }
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < j; ++k) A(j, k) = A(k, j);
  }
  return A;
}

EffectiveMatrix ensemble_effective_matrix(const LatticeShape& shape, const ConductanceLaw& law,
                                          const std::vector<SeedSpec>& seeds, const SolverConfig& cfg,
                                          int threads) {
  if (seeds.size() < 2) throw PreconditionError("ensemble effective matrix needs >= 2 replicas");
  EffectiveMatrix out;
  out.per_replica.resize(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t r) {
    const Environment env = sample_environment(shape, law, seeds[r]);
    out.per_replica[r] = effective_matrix(env, solve_basis_correctors(env, 0.0, cfg));
  });
  const int d = shape.d;
  const double n = static_cast<double>(seeds.size());
  out.n_replicas = static_cast<int>(seeds.size());
  out.A_h = Eigen::MatrixXd::Zero(d, d);
  for (const auto& m : out.per_replica) out.A_h += m;
  out.A_h /= n;
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(d, d);
  for (const auto& m : out.per_replica) var.array() += (m - out.A_h).array().square();
  var /= (n - 1.0);
  out.std_error = (var / n).array().sqrt();
  return out;
}

void save_corrector(const std::filesystem::path& dir, const std::string& stem, const CorrectorSolution& c) {
  std::filesystem::create_directories(dir);
  write_field(dir / (stem + ".phi.bin"), c.phi);
  nlohmann::ordered_json j;
  j["xi"] = c.xi;
  j["mu"] = c.mu;
  j["residual"] = c.residual;
  j["seed"] = {{"master_seed", c.env_ref.master_seed}, {"replica_index", c.env_ref.replica_index}};
  j["env_fingerprint"] = c.env_fingerprint;
  j["solver"] = {{"iterations", c.report.iterations},
                 {"final_rel_residual", c.report.final_rel_residual},
                 {"converged", c.report.converged}};
  j["phi"] = stem + ".phi.bin";
  std::ofstream out(dir / (stem + ".json"));
  out << j.dump(2) << '\n';
}

CorrectorSolution load_corrector(const std::filesystem::path& dir, const std::string& stem) {
  std::ifstream in(dir / (stem + ".json"));
  if (!in) throw Error("missing corrector sidecar " + (dir / (stem + ".json")).string());
  const auto j = nlohmann::json::parse(in);
  CorrectorSolution c;
  c.xi = j.at("xi").get<std::vector<double>>();
  c.mu = j.at("mu").get<double>();
  c.residual = j.at("residual").get<double>();
  c.env_ref.master_seed = j.at("seed").at("master_seed").get<std::uint64_t>();
  c.env_ref.replica_index = j.at("seed").at("replica_index").get<std::uint32_t>();
  c.env_fingerprint = j.at("env_fingerprint").get<std::uint64_t>();
  c.report.iterations = j.at("solver").at("iterations").get<int>();
  c.report.final_rel_residual = j.at("solver").at("final_rel_residual").get<double>();
  c.report.converged = j.at("solver").at("converged").get<bool>();
  c.phi = read_vertex_field(dir / (stem + ".phi.bin"));
  return c;
}

}  // namespace corrlab
