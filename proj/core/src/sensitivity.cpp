#include "corrlab/sensitivity.hpp"

#include <cmath>

#include "corrlab/errors.hpp"
#include "corrlab/parallel.hpp"

namespace corrlab {

VertexField adjoint_from_weights(const Environment& env, double mu, const VertexField& w, const SolverConfig& cfg) {
  VertexField rhs = w;
  if (mu == 0.0) project_mean_zero(rhs.values);
  SolveResult r = solve(env, mu, rhs, cfg);
  require_converged(r.report, "adjoint solve");
  return std::move(r.u);
}

VertexField adjoint_field(const Environment& env, const TestFunction& f, double lambda, double eps,
                          const SolverConfig& cfg, double mu) {
  return adjoint_from_weights(env, mu, field_weights(env.shape, f, lambda, eps), cfg);
}

VertexField point_adjoint(const Environment& env, std::size_t vertex, const SolverConfig& cfg, double mu) {
  if (vertex >= env.shape.num_vertices()) throw PreconditionError("vertex index out of range");
  VertexField w(env.shape);
  w.values[vertex] = 1.0;
  return adjoint_from_weights(env, mu, w, cfg);
}

namespace {

void check_same_env(const Environment& env, const CorrectorSolution& c, const VertexField& u) {
  if (!(c.phi.shape == env.shape) || !(u.shape == env.shape)) {
    throw PreconditionError("corrector, adjoint and environment live on different lattices");
  }
  if (c.env_fingerprint != env.fingerprint()) throw PreconditionError("corrector was computed on a different environment");
}

}  // namespace

DerivativeField first_derivatives_all_edges(const Environment& env, const CorrectorSolution& corrector,
                                            const VertexField& u) {
  check_same_env(env, corrector, u);
  const EdgeField g = corrector.corrected_gradient();
  const EdgeField gu = gradient(u);
  const EdgeField da = env.law_derivative(1);
  DerivativeField out{1, std::nullopt, EdgeField(env.shape)};
  for (std::size_t e = 0; e < g.size(); ++e) out.values.values[e] = -da.values[e] * g.values[e] * gu.values[e];
  return out;
}

DerivativeField second_derivative_row(const Environment& env, const CorrectorSolution& corrector,
                                      const VertexField& u, std::size_t anchor, const VertexField& dipole) {
  check_same_env(env, corrector, u);
  if (anchor >= env.shape.num_edges()) throw PreconditionError("anchor edge out of range");
  if (!(dipole.shape == env.shape)) throw PreconditionError("dipole field lives on a different lattice");
  const EdgeField g = corrector.corrected_gradient();
  const EdgeField gu = gradient(u);
  const EdgeField M = gradient(dipole);
  const EdgeField da = env.law_derivative(1);
  const double da_p = da.values[anchor];
  const double gu_p = gu.values[anchor];
  const double g_p = g.values[anchor];

  DerivativeField out{2, anchor, EdgeField(env.shape)};
  for (std::size_t e = 0; e < g.size(); ++e) {
    out.values.values[e] = da.values[e] * da_p * M.values[e] * (gu.values[e] * g_p + gu_p * g.values[e]);
  }
  const double dda = env.law.eval(env.zeta.values[anchor], 2);
  out.values.values[anchor] = 2.0 * da_p * da_p * gu_p * M.values[anchor] * g_p - dda * gu_p * g_p;
  return out;
}

DerivativeField second_derivative_row(const Environment& env, const CorrectorSolution& corrector,
                                      const VertexField& u, std::size_t anchor, const SolverConfig& cfg) {
  if (anchor >= env.shape.num_edges()) throw PreconditionError("anchor edge out of range");
  SolveResult v = solve(env, corrector.mu, dipole_rhs(env.shape, anchor), cfg);
  require_converged(v.report, "dipole solve");
  return second_derivative_row(env, corrector, u, anchor, v.u);
}

namespace {

double wrap_offset(double delta, int L) {
  const double half = 0.5 * L;
  while (delta > half) delta -= L;
  while (delta <= -half) delta += L;
  return delta;
}

}  // namespace

double edge_distance(const LatticeShape& shape, std::size_t e1, std::size_t e2) {
  const auto d = static_cast<std::size_t>(shape.d);
  const auto c1 = shape.vertex_coords(e1 / d);
  const auto c2 = shape.vertex_coords(e2 / d);
  double r2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double m1 = c1[i] + (e1 % d == i ? 0.5 : 0.0);
    const double m2 = c2[i] + (e2 % d == i ? 0.5 : 0.0);
    const double t = wrap_offset(m1 - m2, shape.L);
    r2 += t * t;
  }
  return std::sqrt(r2);
}

double vertex_edge_distance(const LatticeShape& shape, std::size_t v, std::size_t e) {
  const auto d = static_cast<std::size_t>(shape.d);
  const auto cv = shape.vertex_coords(v);
  const auto ce = shape.vertex_coords(e / d);
  double r2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double m = ce[i] + (e % d == i ? 0.5 : 0.0);
    const double t = wrap_offset(cv[i] - m, shape.L);
    r2 += t * t;
  }
  return std::sqrt(r2);
}

DecayAccumulator::DecayAccumulator(double max_r) {
  const auto n = static_cast<std::size_t>(std::floor(max_r + 0.5)) + 1;
  r_sum_.assign(n, 0.0);
  count_.assign(n, 0);
  ms_sum_.assign(n, 0.0);
  ms_sq_sum_.assign(n, 0.0);
}

void DecayAccumulator::add_replica(std::span<const double> r, std::span<const double> values) {
  if (r.size() != values.size()) throw PreconditionError("separation and value lists differ in length");
  std::vector<double> sq(ms_sum_.size(), 0.0);
  std::vector<int> cnt(ms_sum_.size(), 0);
  std::vector<double> rs(ms_sum_.size(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto b = static_cast<std::size_t>(std::floor(r[i] + 0.5));
    if (b >= sq.size()) continue;
    sq[b] += values[i] * values[i];
    rs[b] += r[i];
    ++cnt[b];
  }
  for (std::size_t b = 0; b < sq.size(); ++b) {
    if (cnt[b] == 0) continue;
    const double ms = sq[b] / cnt[b];
    ms_sum_[b] += ms;
    ms_sq_sum_[b] += ms * ms;
    if (n_ == 0) {
      r_sum_[b] = rs[b] / cnt[b];
      count_[b] = cnt[b];
    }
  }
  ++n_;
}

std::vector<DecayBin> DecayAccumulator::bins() const {
  std::vector<DecayBin> out;
  if (n_ == 0) return out;
  const double n = n_;
  for (std::size_t b = 0; b < ms_sum_.size(); ++b) {
    if (count_[b] == 0) continue;
    const double ms = ms_sum_[b] / n;
    const double var = n > 1 ? std::max(0.0, (ms_sq_sum_[b] - n * ms * ms) / (n - 1.0)) : 0.0;
    DecayBin bin;
    bin.r = r_sum_[b];
    bin.rms = std::sqrt(ms);
    // delta method: d sqrt(m) = dm / (2 sqrt m)
    bin.std_error = ms > 0.0 ? std::sqrt(var / n) / (2.0 * bin.rms) : 0.0;
    bin.count = count_[b];
    out.push_back(bin);
  }
  return out;
}

ExponentFit fit_power_law(const std::vector<DecayBin>& bins, double r_min, double r_max) {
  ExponentFit fit;
  fit.r_min = r_min;
  fit.r_max = r_max;
  std::vector<double> xs, ys;
  for (const auto& b : bins) {
    if (b.r >= r_min && b.r <= r_max && b.rms > 0.0) {
      xs.push_back(std::log(b.r));
      ys.push_back(std::log(b.rms));
    }
  }
  fit.n_bins = static_cast<int>(xs.size());
  if (fit.n_bins < 3) {
    fit.exponent = fit.intercept = fit.r2 = std::nan("");
    return fit;
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.status = FitStatus::ok;
  return fit;
}

DecayStudy decay_study(const DecayStudyConfig& cfg) {
  if (cfg.n_replicas < 16) throw PreconditionError("decay study needs >= 16 replicas");
  const LatticeShape& shape = cfg.shape;
  const std::size_t anchor = 0;  // origin, axis 1
  const std::size_t x0 = 0;      // base point of the anchor

  std::vector<double> r_first(shape.num_vertices());
  for (std::size_t v = 0; v < r_first.size(); ++v) r_first[v] = vertex_edge_distance(shape, v, anchor);
  std::vector<double> r_second(shape.num_edges());
  for (std::size_t e = 0; e < r_second.size(); ++e) r_second[e] = edge_distance(shape, e, anchor);

  const double max_r = 0.5 * std::sqrt(static_cast<double>(shape.d)) * shape.L + 1.0;
  DecayAccumulator first(max_r), second(max_r);
  const auto n = static_cast<std::size_t>(cfg.n_replicas);
  const auto chunk = static_cast<std::size_t>(std::max(cfg.threads, 1));
  std::vector<VertexField> d1(chunk);
  std::vector<EdgeField> d2(chunk);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t count = std::min(chunk, n - start);
    parallel_for(count, cfg.threads, [&](std::size_t k) {
      const SeedSpec seed{cfg.master_seed, static_cast<std::uint32_t>(start + k)};
      const Environment env = sample_environment(shape, cfg.law, seed);
      const CorrectorSolution c = solve_corrector(env, cfg.xi, 0.0, cfg.solver);
      SolveResult dip = dipole_solve(env, anchor, 0.0, cfg.solver);
      require_converged(dip.report, "dipole solve");
      const EdgeField g = c.corrected_gradient();
      const double scale = -env.law.eval(env.zeta.values[anchor], 1) * g.values[anchor];
      VertexField field(shape);
      for (std::size_t v = 0; v < field.size(); ++v) field.values[v] = scale * dip.u.values[v];
      d1[k] = std::move(field);
      const VertexField u = point_adjoint(env, x0, cfg.solver);
      d2[k] = second_derivative_row(env, c, u, anchor, dip.u).values;
    });
    for (std::size_t k = 0; k < count; ++k) {
      first.add_replica(r_first, d1[k].values);
      second.add_replica(r_second, d2[k].values);
    }
  }
  DecayStudy out;
  out.first = first.bins();
  out.second = second.bins();
  const double r_hi = 0.25 * shape.L;
  out.first_fit = fit_power_law(out.first, 2.0, r_hi);
  out.second_fit = fit_power_law(out.second, 2.0, r_hi);
  return out;
}

}  // namespace corrlab
