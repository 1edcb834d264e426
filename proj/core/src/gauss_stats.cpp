#include "corrlab/gauss_stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "corrlab/errors.hpp"
#include "corrlab/parallel.hpp"
#include "corrlab/philox.hpp"

namespace corrlab {

namespace {

template <typename E>
[[noreturn]] void rethrow_as(const E& e, std::size_t replica) {
  throw E("replica " + std::to_string(replica) + ": " + e.what());
}

}  // namespace

std::vector<SampleSet> run_campaign(const CampaignConfig& cfg, const ReplicaObserver& observer) {
  if (cfg.n_replicas < 1) throw ConfigError("n_replicas must be >= 1");
  if (cfg.xi.size() != static_cast<std::size_t>(cfg.shape.d)) throw ConfigError("xi must have d components");
  cfg.law.validate();
  cfg.solver.validate();
  std::vector<VertexField> weights;
  for (const Probe& p : cfg.probes) weights.push_back(field_weights(cfg.shape, cfg.f, p.lambda, p.eps));

  const auto n = static_cast<std::size_t>(cfg.n_replicas);
  std::vector<SampleSet> sets(cfg.probes.size());
  for (std::size_t k = 0; k < sets.size(); ++k) {
    sets[k].probe = cfg.probes[k];
    sets[k].values.assign(n, 0.0);
    sets[k].seeds.assign(n, SeedSpec{});
  }
  parallel_for(n, cfg.threads, [&](std::size_t r) {
    const SeedSpec seed{cfg.master_seed, cfg.first_replica + static_cast<std::uint32_t>(r)};
    try {
      const Environment env = sample_environment(cfg.shape, cfg.law, seed);
      const CorrectorSolution c = solve_corrector(env, cfg.xi, cfg.mu, cfg.solver);
      for (std::size_t k = 0; k < sets.size(); ++k) {
        sets[k].values[r] = dot(weights[k], c.phi);
        sets[k].seeds[r] = seed;
      }
      if (observer) observer(r, env, c);
    } catch (const SolverError& e) {
      rethrow_as(e, seed.replica_index);
    } catch (const GuardError& e) {
      rethrow_as(e, seed.replica_index);
    } catch (const PreconditionError& e) {
      rethrow_as(e, seed.replica_index);
    }
  });
  return sets;
}

namespace {

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }
double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }
// Antiderivative of the normal CDF.
double cdf_integral(double t) { return t * normal_cdf(t) + normal_pdf(t); }

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double unbiased_variance(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Integral of |c - Phi| over [a, b], c in (0, 1).
double level_gap(double a, double b, double c) {
  if (!(b > a)) return 0.0;
  const double t = boost::math::quantile(boost::math::normal_distribution<double>(), c);
  auto signed_part = [c](double lo, double hi) { return c * (hi - lo) - (cdf_integral(hi) - cdf_integral(lo)); };
  if (t <= a) return -signed_part(a, b);
  if (t >= b) return signed_part(a, b);
  return signed_part(a, t) - signed_part(t, b);
}

double w1_sorted(const std::vector<double>& z) {
  const std::size_t n = z.size();
  const double dn = static_cast<double>(n);
  double total = cdf_integral(z.front()) + cdf_integral(-z.back());
  for (std::size_t i = 1; i < n; ++i) total += level_gap(z[i - 1], z[i], static_cast<double>(i) / dn);
  return total;
}

Interval percentile_interval(std::vector<double> stats, double level, double point) {
  std::sort(stats.begin(), stats.end());
  const double alpha = 0.5 * (1.0 - level);
  auto pick = [&](double q) {
    const double pos = q * static_cast<double>(stats.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    return i + 1 < stats.size() ? stats[i] * (1.0 - frac) + stats[i + 1] * frac : stats[i];
  };
  Interval ci{pick(alpha), pick(1.0 - alpha)};
  ci.lo = std::min(ci.lo, point);
  ci.hi = std::max(ci.hi, point);
  return ci;
}

void check_bootstrap(const BootstrapOptions& b) {
  if (b.resamples < 10) throw ConfigError("bootstrap needs >= 10 resamples");
  if (!(b.level > 0.0 && b.level < 1.0)) throw ConfigError("bootstrap level must lie in (0, 1)");
}

}  // namespace

double wasserstein1_to_gaussian(std::span<const double> samples, bool normalize) {
  if (samples.size() < 2) throw PreconditionError("Wasserstein distance needs >= 2 samples");
  std::vector<double> z(samples.begin(), samples.end());
  if (normalize) {
    const double m = mean_of(z);
    const double s = std::sqrt(unbiased_variance(z));
    if (!(s > 0.0)) throw DegenerateDistribution("samples have zero spread; cannot studentize");
    for (double& x : z) x = (x - m) / s;
  }
  std::sort(z.begin(), z.end());
  return w1_sorted(z);
}

double noise_floor(int n, int simulations, std::uint64_t seed, double level) {
  if (n < 2) throw PreconditionError("noise floor needs n >= 2");
  if (simulations < 10) throw ConfigError("noise floor needs >= 10 simulations");
  PhiloxStream rng(seed, StreamTag::noise_floor, static_cast<std::uint32_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(simulations));
  std::vector<double> z(static_cast<std::size_t>(n));
  for (auto& d : dist) {
    for (auto& x : z) x = rng.normal();
    d = wasserstein1_to_gaussian(z, true);
  }
  std::sort(dist.begin(), dist.end());
  const auto i = static_cast<std::size_t>(std::ceil(level * simulations)) - 1;
  return dist[std::min(i, dist.size() - 1)];
}

StatsReport compute_stats(std::span<const double> values, const BootstrapOptions& boot, int noise_simulations) {
  if (values.size() < 2) throw PreconditionError("statistics need >= 2 samples");
  check_bootstrap(boot);
  StatsReport r;
  r.n = static_cast<int>(values.size());
  r.mean = mean_of(values);
  r.variance = unbiased_variance(values);
  r.sigma_eps = std::sqrt(r.variance);
  r.mean_stderr = std::sqrt(r.variance / r.n);
  r.noise_floor = noise_floor(r.n, noise_simulations, boot.seed);
  if (!(r.variance > 0.0)) {
    r.degenerate = true;
    r.dK = r.sigma_eps;
    r.variance_ci = {r.variance, r.variance};
    r.sigma_eps_ci = {r.sigma_eps, r.sigma_eps};
    r.dK_ci = {r.dK, r.dK};
    return r;
  }
  r.dK = wasserstein1_to_gaussian(values, true);
  r.above_noise_floor = r.dK > r.noise_floor;

  PhiloxStream rng(boot.seed, StreamTag::bootstrap, boot.stream);
  std::vector<double> var_b, dk_b;
  std::vector<double> resample(values.size());
  for (int b = 0; b < boot.resamples; ++b) {
    for (auto& x : resample) x = values[rng.below(values.size())];
    const double v = unbiased_variance(resample);
    var_b.push_back(v);
    dk_b.push_back(v > 0.0 ? wasserstein1_to_gaussian(resample, true) : r.dK);
  }
  r.variance_ci = percentile_interval(var_b, boot.level, r.variance);
  r.sigma_eps_ci = {std::sqrt(r.variance_ci.lo), std::sqrt(r.variance_ci.hi)};
  r.dK_ci = percentile_interval(dk_b, boot.level, r.dK);
  return r;
}

std::string_view to_string(FitStatus s) { return s == FitStatus::ok ? "ok" : "inconclusive"; }

RateFit rate_fit(std::span<const double> eps, std::span<const double> dK, int d, const std::vector<bool>& mask) {
  if (eps.size() != dK.size()) throw PreconditionError("eps and dK lists differ in length");
  if (!mask.empty() && mask.size() != eps.size()) throw PreconditionError("mask length differs from eps list");
  std::vector<std::size_t> order(eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps[a] > eps[b]; });

  RateFit fit;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (!(eps[i] > 0.0 && eps[i] < 1.0)) throw PreconditionError("rate fit needs eps in (0, 1)");
    if (k > 0 && eps[i] == fit.eps_grid.back()) throw PreconditionError("eps grid has duplicates");
    fit.eps_grid.push_back(eps[i]);
    fit.dK_values.push_back(dK[i]);
    fit.mask.push_back((mask.empty() || mask[i]) && dK[i] > 0.0);
  }
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < fit.eps_grid.size(); ++k) {
    if (!fit.mask[k]) continue;
    const double e = fit.eps_grid[k];
    xs.push_back(std::log(std::pow(e, 0.5 * d) * std::abs(std::log(e))));
    ys.push_back(std::log(fit.dK_values[k]));
  }
  fit.n_used = static_cast<int>(xs.size());
  if (fit.n_used < 3) {
    fit.status = FitStatus::inconclusive;
    fit.slope = fit.intercept = fit.r2 = std::nan("");
    fit.slope_ci = {std::nan(""), std::nan("")};
    return fit;
  }
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.slope_ci = {fit.slope, fit.slope};
  fit.status = FitStatus::ok;
  return fit;
}

RateFit rate_fit_campaign(const std::vector<SampleSet>& sets, int d, const BootstrapOptions& boot,
                          int noise_simulations) {
  check_bootstrap(boot);
  std::vector<double> eps, dk;
  std::vector<bool> mask;
  for (const auto& s : sets) {
    const StatsReport r = compute_stats(s.values, boot, noise_simulations);
    eps.push_back(s.probe.eps);
    dk.push_back(r.dK);
    mask.push_back(r.above_noise_floor);
  }
  RateFit fit = rate_fit(eps, dk, d, mask);
  if (fit.status != FitStatus::ok) return fit;

  const std::size_t n = sets.front().values.size();
  for (const auto& s : sets) {
    if (s.values.size() != n) throw PreconditionError("sample sets differ in size");
  }
  PhiloxStream rng(boot.seed, StreamTag::bootstrap, boot.stream + 0x1000u);
  std::vector<double> slopes;
  std::vector<std::size_t> idx(n);
  std::vector<double> resample(n), dk_b(sets.size());
  for (int b = 0; b < boot.resamples; ++b) {
    for (auto& i : idx) i = rng.below(n);
    bool ok = true;
    for (std::size_t k = 0; k < sets.size() && ok; ++k) {
      for (std::size_t j = 0; j < n; ++j) resample[j] = sets[k].values[idx[j]];
      try {
        dk_b[k] = wasserstein1_to_gaussian(resample, true);
      } catch (const DegenerateDistribution&) {
        ok = false;
      }
    }
    if (!ok) continue;
    const RateFit fb = rate_fit(eps, dk_b, d, mask);
    if (fb.status == FitStatus::ok) slopes.push_back(fb.slope);
  }
  if (slopes.size() >= 10) fit.slope_ci = percentile_interval(slopes, boot.level, fit.slope);
  return fit;
}

std::vector<MomentRow> moment_scan(const std::vector<SampleSet>& sets, std::span<const int> p_list, int d,
                                   const BootstrapOptions& boot) {
  check_bootstrap(boot);
  for (int p : p_list) {
    if (p < 1 || p > 8) throw ConfigError("moment order p must be an integer in [1, 8]");
  }
  std::vector<MomentRow> rows;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& s = sets[k];
    if (s.values.size() < 2) throw PreconditionError("moment scan needs >= 2 samples per set");
    const double norm = std::pow(s.probe.lambda, 1.0 - 0.5 * d);
    for (int p : p_list) {
      auto moment = [p](std::span<const double> v) {
        double acc = 0.0;
        for (double x : v) acc += std::pow(std::abs(x), p);
        return std::pow(acc / static_cast<double>(v.size()), 1.0 / p);
      };
      MomentRow row;
      row.eps = s.probe.eps;
      row.lambda = s.probe.lambda;
      row.p = p;
      row.moment = moment(s.values);
      row.normalized = row.moment / norm;
      row.odd = p % 2 == 1;
      PhiloxStream rng(boot.seed, StreamTag::bootstrap,
                       boot.stream + 0x2000u + static_cast<std::uint32_t>(k * 16 + static_cast<std::size_t>(p)));
      std::vector<double> stats;
      std::vector<double> resample(s.values.size());
      for (int b = 0; b < boot.resamples; ++b) {
        for (auto& x : resample) x = s.values[rng.below(s.values.size())];
        stats.push_back(moment(resample) / norm);
      }
      row.normalized_ci = percentile_interval(stats, boot.level, row.normalized);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace corrlab
