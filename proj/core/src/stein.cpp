#include "corrlab/stein.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "corrlab/errors.hpp"
#include "corrlab/parallel.hpp"
#include "corrlab/philox.hpp"

namespace corrlab {

namespace {

constexpr int kShells = 4;
constexpr double kShellWidth = 0.5;

}  // namespace

AnchorSample stratified_anchors(const LatticeShape& shape, double eps, int m, std::uint64_t seed,
                                std::uint32_t stream) {
  if (m < 2 * kShells) throw ConfigError("need at least " + std::to_string(2 * kShells) + " Stein anchors");
  std::vector<std::vector<std::size_t>> members(kShells);
  for (std::size_t e = 0; e < shape.num_edges(); ++e) {
    const double r = eps * vertex_edge_distance(shape, 0, e);
    const int s = std::min(kShells - 1, static_cast<int>(std::floor(r / kShellWidth)));
    members[static_cast<std::size_t>(s)].push_back(e);
  }
  AnchorSample out;
  std::vector<int> alloc(kShells, 0);
  std::size_t total = 0;
  for (const auto& s : members) total += s.size();
  int remaining = m;
  for (int s = 0; s < kShells; ++s) {
    alloc[static_cast<std::size_t>(s)] = std::min<int>(2, static_cast<int>(members[static_cast<std::size_t>(s)].size()));
    remaining -= alloc[static_cast<std::size_t>(s)];
  }
  // Largest-remainder proportional allocation of the rest.
  std::vector<double> frac(kShells);
  int given = 0;
  for (int s = 0; s < kShells; ++s) {
    const double share = remaining * static_cast<double>(members[static_cast<std::size_t>(s)].size()) / total;
    const int base = static_cast<int>(std::floor(share));
    alloc[static_cast<std::size_t>(s)] += base;
    given += base;
    frac[static_cast<std::size_t>(s)] = share - base;
  }
  while (given < remaining) {
    const auto s = static_cast<std::size_t>(std::max_element(frac.begin(), frac.end()) - frac.begin());
    ++alloc[s];
    frac[s] = -1.0;
    ++given;
  }
  PhiloxStream rng(seed, StreamTag::anchors, stream);
  for (int s = 0; s < kShells; ++s) {
    auto pool = members[static_cast<std::size_t>(s)];
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(alloc[static_cast<std::size_t>(s)]), pool.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      out.edges.push_back(pool[i]);
      out.shell_of.push_back(s);
    }
    out.shell_sizes.push_back(members[static_cast<std::size_t>(s)].size());
  }
  return out;
}

namespace {

struct ProbeAccumulators {
  std::vector<double> d1;               // sum over replicas of (d_e Phi)^4
  std::vector<std::vector<double>> d2;  // per anchor: sum of (d_{e'} d_e Phi)^4
};

struct BoundParts {
  double with_tail = 0.0;
  double truncated = 0.0;
  double sampling_stderr = 0.0;
};

/// Evaluates the bound from fourth-moment sums over `n` replicas.
BoundParts evaluate_bound(const LatticeShape& shape, const AnchorSample& anchors,
                          const std::vector<std::vector<double>>& dist, const std::vector<double>& d1,
                          const std::vector<std::vector<double>>& d2, double n, double sigma, int radius) {
  const double dd = shape.d;
  std::vector<double> s_with(anchors.edges.size()), s_trunc(anchors.edges.size());
  for (std::size_t j = 0; j < anchors.edges.size(); ++j) {
    const auto& r = dist[j];
    double inner = 0.0, fit_num = 0.0, beyond = 0.0;
    int fit_count = 0;
    for (std::size_t e = 0; e < d1.size(); ++e) {
      if (r[e] > radius) {
        beyond += std::pow(r[e], -dd);
        continue;
      }
      const double t = std::pow(d1[e] / n, 0.25) * std::pow(d2[j][e] / n, 0.25) / (sigma * sigma);
      inner += t;
      if (r[e] > 0.5 * radius) {
        fit_num += t * std::pow(r[e], dd);
        ++fit_count;
      }
    }
    const double tail = fit_count > 0 ? fit_num / fit_count * beyond : 0.0;
    s_trunc[j] = inner;
    s_with[j] = inner + tail;
  }
  auto outer = [&](const std::vector<double>& s, double* stderr_out) {
    double total = 0.0, var = 0.0;
    for (std::size_t sh = 0; sh < anchors.shell_sizes.size(); ++sh) {
      std::vector<double> vals;
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (anchors.shell_of[j] == static_cast<int>(sh)) vals.push_back(s[j] * s[j]);
      }
      if (vals.empty()) continue;
      const double N = static_cast<double>(anchors.shell_sizes[sh]);
      const double k = static_cast<double>(vals.size());
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= k;
      total += N * mean;
      if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        var += N * N * (1.0 - k / N) * (ss / (k - 1.0)) / k;
      }
    }
    const double c = std::sqrt(5.0 / std::numbers::pi);
    const double b = c * std::sqrt(total);
    if (stderr_out) *stderr_out = total > 0.0 ? c * std::sqrt(var) / (2.0 * std::sqrt(total)) : 0.0;
    return b;
  };
  BoundParts p;
  p.with_tail = outer(s_with, &p.sampling_stderr);
  p.truncated = outer(s_trunc, nullptr);
  return p;
}

double sample_sd(const std::vector<double>& v, const std::vector<bool>* drop) {
  double s = 0.0, n = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (drop && (*drop)[i]) continue;
    s += v[i];
    n += 1.0;
  }
  const double m = s / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (drop && (*drop)[i]) continue;
    ss += (v[i] - m) * (v[i] - m);
  }
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

SteinRun stein_bound(const SteinConfig& cfg) {
  const CampaignConfig& cc = cfg.campaign;
  const LatticeShape& shape = cc.shape;
  if (cc.n_replicas < 16) throw PreconditionError("Stein bound needs >= 16 replicas for fourth moments");
  const int radius = cfg.truncation_radius == 0 ? shape.L / 2 : cfg.truncation_radius;
  if (radius < 1 || 2 * radius > shape.L) throw PreconditionError("truncation radius must lie in [1, L/2]");
  for (int r : cfg.radius_profile) {
    if (r < 1 || 2 * r > shape.L) throw PreconditionError("profile radii must lie in [1, L/2]");
  }
  const int groups = std::max(2, std::min(cfg.jackknife_groups, cc.n_replicas / 2));
  cc.law.validate();
  cc.solver.validate();

  const std::size_t n_probes = cc.probes.size();
  const std::size_t n_edges = shape.num_edges();
  std::vector<VertexField> weights;
  std::vector<AnchorSample> anchors;
  std::vector<std::vector<std::vector<double>>> dist(n_probes);
  for (std::size_t k = 0; k < n_probes; ++k) {
    weights.push_back(field_weights(shape, cc.f, cc.probes[k].lambda, cc.probes[k].eps));
    anchors.push_back(stratified_anchors(shape, cc.probes[k].eps, cfg.anchors, cc.master_seed,
                                         static_cast<std::uint32_t>(k)));
    for (std::size_t a : anchors[k].edges) {
      std::vector<double> r(n_edges);
      for (std::size_t e = 0; e < n_edges; ++e) r[e] = edge_distance(shape, e, a);
      dist[k].push_back(std::move(r));
    }
  }

  // Fourth-moment sums per jackknife group and probe.
  std::vector<std::vector<ProbeAccumulators>> acc(static_cast<std::size_t>(groups),
                                                  std::vector<ProbeAccumulators>(n_probes));
  for (auto& g : acc) {
    for (std::size_t k = 0; k < n_probes; ++k) {
      g[k].d1.assign(n_edges, 0.0);
      g[k].d2.assign(anchors[k].edges.size(), std::vector<double>(n_edges, 0.0));
    }
  }

  SteinRun run;
  run.samples.resize(n_probes);
  const auto n = static_cast<std::size_t>(cc.n_replicas);
  for (std::size_t k = 0; k < n_probes; ++k) {
    run.samples[k].probe = cc.probes[k];
    run.samples[k].values.assign(n, 0.0);
    run.samples[k].seeds.assign(n, SeedSpec{});
  }

  struct ReplicaOut {
    std::vector<EdgeField> d1;
    std::vector<std::vector<EdgeField>> d2;
  };
  const auto chunk = static_cast<std::size_t>(std::max(cc.threads, 1));
  std::vector<ReplicaOut> buf(chunk);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t count = std::min(chunk, n - start);
    parallel_for(count, cc.threads, [&](std::size_t slot) {
      const std::size_t r = start + slot;
      const SeedSpec seed{cc.master_seed, cc.first_replica + static_cast<std::uint32_t>(r)};
      const Environment env = sample_environment(shape, cc.law, seed);
      const CorrectorSolution c = solve_corrector(env, cc.xi, cc.mu, cc.solver);
      ReplicaOut out;
      std::map<std::size_t, VertexField> dipoles;
      for (std::size_t k = 0; k < n_probes; ++k) {
        run.samples[k].values[r] = dot(weights[k], c.phi);
        run.samples[k].seeds[r] = seed;
        const VertexField u = adjoint_from_weights(env, cc.mu, weights[k], cc.solver);
        out.d1.push_back(first_derivatives_all_edges(env, c, u).values);
        std::vector<EdgeField> rows;
        for (std::size_t a : anchors[k].edges) {
          auto it = dipoles.find(a);
          if (it == dipoles.end()) {
            SolveResult v = solve(env, cc.mu, dipole_rhs(shape, a), cc.solver);
            require_converged(v.report, "dipole solve");
            it = dipoles.emplace(a, std::move(v.u)).first;
          }
          rows.push_back(second_derivative_row(env, c, u, a, it->second).values);
        }
        out.d2.push_back(std::move(rows));
      }
      buf[slot] = std::move(out);
    });
    for (std::size_t slot = 0; slot < count; ++slot) {
      const std::size_t r = start + slot;
      auto& g = acc[r * static_cast<std::size_t>(groups) / n];
      for (std::size_t k = 0; k < n_probes; ++k) {
        const auto& v1 = buf[slot].d1[k].values;
        for (std::size_t e = 0; e < n_edges; ++e) g[k].d1[e] += v1[e] * v1[e] * v1[e] * v1[e];
        for (std::size_t j = 0; j < anchors[k].edges.size(); ++j) {
          const auto& v2 = buf[slot].d2[k][j].values;
          auto& dst = g[k].d2[j];
          for (std::size_t e = 0; e < n_edges; ++e) dst[e] += v2[e] * v2[e] * v2[e] * v2[e];
        }
      }
      buf[slot] = ReplicaOut{};
    }
  }

  for (std::size_t k = 0; k < n_probes; ++k) {
    SteinBoundReport rep;
    rep.probe = cc.probes[k];
    rep.truncation_radius = radius;
    rep.sampled_anchors = static_cast<int>(anchors[k].edges.size());
    rep.shells = static_cast<int>(anchors[k].shell_sizes.size());
    rep.mc_replicas = cc.n_replicas;

    std::vector<double> d1(n_edges, 0.0);
    std::vector<std::vector<double>> d2(anchors[k].edges.size(), std::vector<double>(n_edges, 0.0));
    for (const auto& g : acc) {
      for (std::size_t e = 0; e < n_edges; ++e) d1[e] += g[k].d1[e];
      for (std::size_t j = 0; j < d2.size(); ++j) {
        for (std::size_t e = 0; e < n_edges; ++e) d2[j][e] += g[k].d2[j][e];
      }
    }
    bool all_zero = std::all_of(d1.begin(), d1.end(), [](double x) { return x == 0.0; });
    for (const auto& row : d2) all_zero = all_zero && std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; });
    const auto& values = run.samples[k].values;
    rep.sigma_eps = sample_sd(values, nullptr);
    if (all_zero) {
      rep.degenerate = true;
      for (int rr : cfg.radius_profile) rep.profile.push_back({rr, 0.0, 0.0});
      run.reports.push_back(rep);
      continue;
    }
    if (!(rep.sigma_eps > 0.0)) throw PreconditionError("Stein bound needs sigma_eps > 0");

    const double dn = static_cast<double>(n);
    const BoundParts main = evaluate_bound(shape, anchors[k], dist[k], d1, d2, dn, rep.sigma_eps, radius);
    rep.bound = main.with_tail;
    rep.truncated_bound = main.truncated;
    rep.tail_estimate = main.with_tail - main.truncated;
    rep.sampling_stderr = main.sampling_stderr;

    // Grouped jackknife: drop one contiguous block of replicas at a time.
    std::vector<double> jk;
    for (std::size_t gi = 0; gi < acc.size(); ++gi) {
      std::vector<bool> drop(n, false);
      double kept = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        drop[r] = r * acc.size() / n == gi;
        if (!drop[r]) kept += 1.0;
      }
      std::vector<double> j1 = d1;
      std::vector<std::vector<double>> j2 = d2;
      for (std::size_t e = 0; e < n_edges; ++e) j1[e] -= acc[gi][k].d1[e];
      for (std::size_t j = 0; j < j2.size(); ++j) {
        for (std::size_t e = 0; e < n_edges; ++e) j2[j][e] = std::max(0.0, j2[j][e] - acc[gi][k].d2[j][e]);
      }
      for (double& x : j1) x = std::max(0.0, x);
      const double sd = sample_sd(values, &drop);
      jk.push_back(evaluate_bound(shape, anchors[k], dist[k], j1, j2, kept, sd, radius).with_tail);
    }
    double jm = 0.0;
    for (double x : jk) jm += x;
    jm /= static_cast<double>(jk.size());
    double jv = 0.0;
    for (double x : jk) jv += (x - jm) * (x - jm);
    const double G = static_cast<double>(jk.size());
    rep.replica_stderr = std::sqrt((G - 1.0) / G * jv);
    rep.uncertainty = std::hypot(rep.sampling_stderr, rep.replica_stderr);
    rep.bound_ci = {std::max(0.0, rep.bound - 1.96 * rep.uncertainty), rep.bound + 1.96 * rep.uncertainty};

    for (int rr : cfg.radius_profile) {
      const BoundParts p = evaluate_bound(shape, anchors[k], dist[k], d1, d2, dn, rep.sigma_eps, rr);
      rep.profile.push_back({rr, p.truncated, p.with_tail});
    }
    run.reports.push_back(rep);
  }
  return run;
}

Dominance check_dominance(const StatsReport& stats, const SteinBoundReport& report) {
  Dominance d;
  d.dK = stats.dK;
  d.bound = report.bound;
  d.dK_halfwidth = std::max(0.5 * (stats.dK_ci.hi - stats.dK_ci.lo), stats.noise_floor);
  d.bound_halfwidth = 1.96 * report.uncertainty;
  d.combined = std::hypot(d.dK_halfwidth, d.bound_halfwidth);
  d.excess = d.dK - d.bound - d.combined;
  d.holds = d.excess <= 0.0;
  return d;
}

}  // namespace corrlab
