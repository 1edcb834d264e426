#include "corrlab_cli/commands.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <optional>

#include "corrlab/bound_lab.hpp"
#include "corrlab/covariance.hpp"
#include "corrlab/errors.hpp"
#include "corrlab/parallel.hpp"
#include "corrlab/stein.hpp"

namespace corrlab::cli {

namespace {

using nlohmann::ordered_json;

std::string replica_stem(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu", prefix, i);
  return buf;
}

std::vector<SeedSpec> seeds_of(const ExperimentConfig& c) {
  std::vector<SeedSpec> seeds;
  for (int i = 0; i < c.n_replicas; ++i) seeds.push_back({c.master_seed, static_cast<std::uint32_t>(i)});
  return seeds;
}

CampaignConfig campaign_of(const ExperimentConfig& c, std::vector<Probe> probes, int threads) {
  CampaignConfig k;
  k.shape = c.shape();
  k.law = c.law;
  k.xi = c.xi;
  k.mu = c.mu;
  k.f = c.make_test_function();
  k.probes = std::move(probes);
  k.n_replicas = c.n_replicas;
  k.master_seed = c.master_seed;
  k.solver = c.solver;
  k.threads = threads;
  return k;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

ordered_json interval_json(const Interval& iv) { return ordered_json::array({iv.lo, iv.hi}); }

/// JSON artifact body: every data document carries the config hash.
ordered_json artifact(const RunContext& ctx) {
  ordered_json j;
  j["config_hash"] = ctx.hash();
  return j;
}

// ---------------------------------------------------------------- stages

void write_samples(RunContext& ctx, const std::string& prefix, const std::vector<SampleSet>& sets) {
  CsvWriter csv(ctx.file(prefix + "samples.csv"), {"replica", "eps", "lambda", "value"});
  for (const SampleSet& s : sets) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      csv.row({s.seeds[i].replica_index, s.probe.eps, s.probe.lambda, s.values[i]});
    }
  }
}

std::vector<StatsReport> probe_stats(const ExperimentConfig& c, const std::vector<SampleSet>& sets) {
  std::vector<StatsReport> out;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    out.push_back(compute_stats(sets[k].values, c.bootstrap(static_cast<std::uint32_t>(k)), c.noise_simulations));
  }
  return out;
}

/// Sample sets sharing each lambda, eps strictly decreasing.
std::map<double, std::vector<SampleSet>> by_lambda(const std::vector<SampleSet>& sets) {
  std::map<double, std::vector<SampleSet>> groups;
  for (const SampleSet& s : sets) groups[s.probe.lambda].push_back(s);
  for (auto& [_, g] : groups) {
    std::sort(g.begin(), g.end(), [](const SampleSet& a, const SampleSet& b) { return a.probe.eps > b.probe.eps; });
  }
  return groups;
}

int write_stats(RunContext& ctx, const std::string& prefix, const std::vector<SampleSet>& sets) {
  const ExperimentConfig& c = ctx.config();
  const std::vector<StatsReport> stats = probe_stats(c, sets);
  {
    CsvWriter csv(ctx.file(prefix + "stats.csv"),
                  {"eps", "lambda", "n", "mean", "mean_stderr", "variance", "variance_lo", "variance_hi", "sigma_eps",
                   "sigma_eps_lo", "sigma_eps_hi", "dK", "dK_lo", "dK_hi", "noise_floor", "above_noise_floor",
                   "degenerate"});
    for (std::size_t k = 0; k < sets.size(); ++k) {
      const StatsReport& r = stats[k];
      csv.row({sets[k].probe.eps, sets[k].probe.lambda, r.n, r.mean, r.mean_stderr, r.variance, r.variance_ci.lo,
               r.variance_ci.hi, r.sigma_eps, r.sigma_eps_ci.lo, r.sigma_eps_ci.hi, r.dK, r.dK_ci.lo, r.dK_ci.hi,
               r.noise_floor, r.above_noise_floor, r.degenerate});
    }
  }

  bool inconclusive = false;
  ordered_json fits = ordered_json::array();
  CsvWriter csv(ctx.file(prefix + "rate_fit.csv"), {"lambda", "eps", "rate", "dK", "used"});
  for (const auto& [lambda, group] : by_lambda(sets)) {
    if (group.size() < 2) continue;
    const RateFit fit = rate_fit_campaign(group, c.d, c.bootstrap(0x100), c.noise_simulations);
    for (std::size_t i = 0; i < fit.eps_grid.size(); ++i) {
      const double e = fit.eps_grid[i];
      csv.row({lambda, e, std::pow(e, 0.5 * c.d) * std::abs(std::log(e)), fit.dK_values[i], static_cast<bool>(fit.mask[i])});
    }
    ordered_json f;
    f["lambda"] = lambda;
    f["status"] = std::string(to_string(fit.status));
    f["n_used"] = fit.n_used;
    f["slope"] = fit.slope;
    f["slope_ci"] = interval_json(fit.slope_ci);
    f["intercept"] = fit.intercept;
    f["r2"] = fit.r2;
    fits.push_back(f);
    if (fit.status == FitStatus::inconclusive) {
      inconclusive = true;
      spdlog::warn("rate fit at lambda={} inconclusive: {} point(s) above the noise floor", lambda, fit.n_used);
    }
  }
  ordered_json doc = artifact(ctx);
  doc["fits"] = fits;
  ctx.write_json(ctx.file(prefix + "rate_fit.json"), doc);
  ctx.summary()["rate_fits"] = fits;
  return inconclusive ? kExitInconclusive : kExitOk;
}

void write_moments(RunContext& ctx, const std::string& prefix, const std::vector<SampleSet>& sets) {
  const ExperimentConfig& c = ctx.config();
  const std::vector<MomentRow> rows = moment_scan(sets, c.p_list, c.d, c.bootstrap(0x200));
  CsvWriter csv(ctx.file(prefix + "moments.csv"),
                {"eps", "lambda", "p", "moment", "normalized", "normalized_lo", "normalized_hi", "odd"});
  std::map<std::pair<double, int>, std::pair<double, double>> range;
  for (const MomentRow& r : rows) {
    csv.row({r.eps, r.lambda, r.p, r.moment, r.normalized, r.normalized_ci.lo, r.normalized_ci.hi, r.odd});
    auto [it, fresh] = range.try_emplace({r.eps, r.p}, r.normalized, r.normalized);
    if (!fresh) {
      it->second.first = std::min(it->second.first, r.normalized);
      it->second.second = std::max(it->second.second, r.normalized);
    }
  }
  ordered_json flat = ordered_json::array();
  for (const auto& [key, mm] : range) {
    flat.push_back({{"eps", key.first}, {"p", key.second}, {"max_over_min", mm.first > 0 ? mm.second / mm.first : 0.0}});
  }
  ctx.summary()["moment_flatness"] = flat;
}

EffectiveMatrix write_effective_matrix(RunContext& ctx, const std::string& prefix) {
  const ExperimentConfig& c = ctx.config();
  spdlog::info("effective matrix: {} replicas on L={}", c.n_replicas, c.L);
  EffectiveMatrix em = ensemble_effective_matrix(c.shape(), c.law, seeds_of(c), c.solver, ctx.threads());
  {
    CsvWriter csv(ctx.file(prefix + "effective_matrix.csv"), {"row", "col", "value", "std_error"});
    for (int j = 0; j < c.d; ++j) {
      for (int k = 0; k < c.d; ++k) csv.row({j + 1, k + 1, em.A_h(j, k), em.std_error(j, k)});
    }
  }
  {
    CsvWriter csv(ctx.file(prefix + "effective_matrix_replicas.csv"), {"replica", "row", "col", "value"});
    for (std::size_t r = 0; r < em.per_replica.size(); ++r) {
      for (int j = 0; j < c.d; ++j) {
        for (int k = 0; k < c.d; ++k) csv.row({r, j + 1, k + 1, em.per_replica[r](j, k)});
      }
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(em.A_h);
  std::vector<double> ev(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
  ordered_json doc = artifact(ctx);
  doc["n_replicas"] = em.n_replicas;
  doc["A_h"] = matrix_json(em.A_h);
  doc["std_error"] = matrix_json(em.std_error);
  doc["eigenvalues"] = ev;
  ctx.write_json(ctx.file(prefix + "effective_matrix.json"), doc);
  ctx.summary()["effective_matrix_eigenvalues"] = ev;
  return em;
}

/// Feeds corrector fields to the accumulator in replica order whatever the
/// completion order, so the table is independent of the thread count.
class OrderedCovariance {
 public:
  explicit OrderedCovariance(const LatticeShape& shape) : acc_(shape) {}

  void push(std::size_t slot, const VertexField& phi) {
    std::lock_guard lock(mutex_);
    pending_.emplace(slot, phi);
    while (!pending_.empty() && pending_.begin()->first == next_) {
      acc_.add(pending_.begin()->second);
      pending_.erase(pending_.begin());
      ++next_;
    }
  }
  CovarianceTable table() const { return acc_.table(); }

 private:
  CovarianceAccumulator acc_;
  std::mutex mutex_;
  std::map<std::size_t, VertexField> pending_;
  std::size_t next_ = 0;
};

struct CovarianceStage {
  std::vector<SampleSet> samples;
  CovarianceTable table;
};

CovarianceStage covariance_campaign(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config();
  OrderedCovariance acc(c.shape());
  spdlog::info("campaign: {} replicas, {} probes, L={}", c.n_replicas, c.probes().size(), c.L);
  CovarianceStage out;
  out.samples = run_campaign(campaign_of(c, c.probes(), ctx.threads()),
                             [&](std::size_t slot, const Environment&, const CorrectorSolution& corr) {
                               acc.push(slot, corr.phi);
                             });
  out.table = acc.table();
  return out;
}

void write_covariance(RunContext& ctx, const std::string& prefix, const CovarianceStage& stage,
                      const Eigen::MatrixXd& A_h) {
  const ExperimentConfig& c = ctx.config();
  const LatticeShape shape = c.shape();
  FitOptions opts;
  opts.r_min = c.covariance.r_min;
  opts.r_max = c.covariance.r_max;
  opts.model = c.covariance.model;
  opts.weighting = c.covariance.weighting;
  opts.fit_offset = c.covariance.fit_offset;
  const QFit fit = fit_Q(stage.table, A_h, opts);

  const VertexField k_periodic = periodic_kernel(shape, fit.model);
  {
    CsvWriter csv(ctx.file(prefix + "covariance.csv"),
                  {"x", "r", "c_hat", "std_error", "kernel_periodic", "kernel_continuum", "in_fit_shell"});
    const auto points = shell_points(shape, 0.0, c.covariance.table_radius);
    const auto entries = covariance_entries(stage.table, points);
    for (const CovarianceEntry& e : entries) {
      double r2 = 0.0;
      std::vector<double> xd;
      for (int v : e.x) {
        r2 += static_cast<double>(v) * v;
        xd.push_back(v);
      }
      const double r = std::sqrt(r2);
      const double cont = r > 0.0 ? kernel_K(fit.model, xd) + fit.offset : std::nan("");
      csv.row({join_point(e.x), r, e.c_hat, e.std_error, k_periodic[shape.vertex_index(e.x)], cont,
               r >= opts.r_min && r <= opts.r_max});
    }
  }
  ordered_json q = artifact(ctx);
  q["model"] = c.covariance.model == KernelModel::periodic_lattice ? "periodic_lattice" : "continuum";
  q["A_h"] = matrix_json(fit.model.A_h);
  q["Q"] = matrix_json(fit.model.Q);
  q["unprojected_Q"] = matrix_json(fit.unprojected_Q);
  q["projected"] = fit.projected;
  q["offset"] = fit.offset;
  q["residual"] = fit.residual;
  q["n_points"] = fit.n_points;
  q["n_replicas"] = stage.table.n_replicas;
  ctx.write_json(ctx.file(prefix + "q_fit.json"), q);
  ctx.summary()["q_fit_residual"] = fit.residual;

  const TestFunction f = c.make_test_function();
  const std::vector<StatsReport> stats = probe_stats(c, stage.samples);
  std::map<double, Sigma2Result> continuum;
  CsvWriter csv(ctx.file(prefix + "sigma2.csv"),
                {"eps", "lambda", "variance", "variance_lo", "variance_hi", "sigma2_periodic", "sigma2_limit",
                 "sigma2_limit_quad_err"});
  for (std::size_t k = 0; k < stage.samples.size(); ++k) {
    const Probe& p = stage.samples[k].probe;
    auto it = continuum.find(p.lambda);
    if (it == continuum.end()) it = continuum.emplace(p.lambda, sigma2(fit.model, f, p.lambda)).first;
    csv.row({p.eps, p.lambda, stats[k].variance, stats[k].variance_ci.lo, stats[k].variance_ci.hi,
             sigma2_periodic(shape, fit.model, f, p.lambda, p.eps), it->second.value, it->second.quad_err});
  }
}

int write_stein(RunContext& ctx, const std::string& prefix) {
  const ExperimentConfig& c = ctx.config();
  SteinConfig sc;
  sc.campaign = campaign_of(c, c.probes(), ctx.threads());
  sc.truncation_radius = c.stein.R;
  sc.anchors = c.stein.m;
  sc.radius_profile = c.stein.radius_profile;
  spdlog::info("stein bound: {} replicas, {} anchors per probe, R={}", c.n_replicas, c.stein.m, c.stein.R);
  const SteinRun run = stein_bound(sc);
  write_samples(ctx, prefix, run.samples);
  const std::vector<StatsReport> stats = probe_stats(c, run.samples);

  bool all_hold = true;
  {
    CsvWriter csv(ctx.file(prefix + "stein_bound.csv"),
                  {"eps", "lambda", "bound", "bound_lo", "bound_hi", "truncated_bound", "tail_estimate", "R",
                   "anchors", "shells", "replicas", "sigma_eps", "sampling_stderr", "replica_stderr", "uncertainty",
                   "degenerate", "dK", "dK_halfwidth", "bound_halfwidth", "excess", "dominated"});
    for (std::size_t k = 0; k < run.reports.size(); ++k) {
      const SteinBoundReport& r = run.reports[k];
      const Dominance dom = check_dominance(stats[k], r);
      all_hold = all_hold && dom.holds;
      csv.row({r.probe.eps, r.probe.lambda, r.bound, r.bound_ci.lo, r.bound_ci.hi, r.truncated_bound, r.tail_estimate,
               r.truncation_radius, r.sampled_anchors, r.shells, r.mc_replicas, r.sigma_eps, r.sampling_stderr,
               r.replica_stderr, r.uncertainty, r.degenerate, dom.dK, dom.dK_halfwidth, dom.bound_halfwidth,
               dom.excess, dom.holds});
    }
  }
  {
    CsvWriter csv(ctx.file(prefix + "stein_profile.csv"), {"eps", "lambda", "radius", "truncated", "with_tail"});
    for (const SteinBoundReport& r : run.reports) {
      for (const SteinProfilePoint& p : r.profile) {
        csv.row({r.probe.eps, r.probe.lambda, p.radius, p.truncated, p.with_tail});
      }
    }
  }
  ctx.summary()["stein_dominance_holds"] = all_hold;
  if (!all_hold) spdlog::warn("observed dK exceeds the Stein bound beyond the combined uncertainty");

  if (!c.stein.decay) return kExitOk;
  DecayStudyConfig dc;
  dc.shape = c.shape();
  dc.law = c.law;
  dc.xi = c.xi;
  dc.n_replicas = c.n_replicas;
  dc.master_seed = c.master_seed;
  dc.solver = c.solver;
  dc.threads = ctx.threads();
  spdlog::info("derivative decay study: {} replicas", c.n_replicas);
  const DecayStudy ds = decay_study(dc);
  auto table = [&](const std::string& name, const std::vector<DecayBin>& bins) {
    CsvWriter csv(ctx.file(prefix + name), {"r", "rms", "std_error", "count"});
    for (const DecayBin& b : bins) csv.row({b.r, b.rms, b.std_error, b.count});
  };
  table("decay_first.csv", ds.first);
  table("decay_second.csv", ds.second);
  auto fit_json = [](const ExponentFit& f, int expected) {
    return ordered_json{{"exponent", f.exponent}, {"expected", expected},      {"intercept", f.intercept},
                        {"r2", f.r2},             {"n_bins", f.n_bins},        {"r_min", f.r_min},
                        {"r_max", f.r_max},       {"status", std::string(to_string(f.status))}};
  };
  ordered_json doc = artifact(ctx);
  doc["first"] = fit_json(ds.first_fit, 1 - c.d);
  doc["second"] = fit_json(ds.second_fit, -c.d);
  ctx.write_json(ctx.file(prefix + "decay_fit.json"), doc);
  ctx.summary()["decay_exponents"] = {ds.first_fit.exponent, ds.second_fit.exponent};
  const bool inconclusive =
      ds.first_fit.status == FitStatus::inconclusive || ds.second_fit.status == FitStatus::inconclusive;
  return inconclusive ? kExitInconclusive : kExitOk;
}

void write_lemmas(RunContext& ctx, const std::string& prefix) {
  const ExperimentConfig& c = ctx.config();
  ordered_json doc = artifact(ctx);
  for (const Lemma lemma : {Lemma::xesum, Lemma::eepsum}) {
    const ScanGrid& grid = lemma == Lemma::xesum ? c.lemma.xesum : c.lemma.eepsum;
    spdlog::info("lemma scan {}: {} eps values", to_string(lemma), grid.eps.size());
    const BoundScan scan = constant_scan(lemma, grid, ctx.threads());
    const std::string name(to_string(lemma));
    CsvWriter csv(ctx.file(prefix + "lemma_" + name + ".csv"),
                  {"eps", "p", "radius", "point", "lhs", "rhs", "ratio", "tail", "points"});
    std::map<double, double> per_eps;
    for (const ScanRow& r : scan.rows) {
      csv.row({r.eps, r.p, r.radius, join_point(r.point), r.check.lhs, r.check.rhs, r.check.ratio, r.check.tail,
               r.check.points});
      double& m = per_eps[r.eps];
      m = std::max(m, r.check.ratio);
    }
    ordered_json eps_max = ordered_json::array();
    for (auto it = per_eps.rbegin(); it != per_eps.rend(); ++it) {
      eps_max.push_back({{"eps", it->first}, {"max_ratio", it->second}});
    }
    // Relative change of the maximum between the two finest eps.
    double drift = 0.0;
    if (per_eps.size() >= 2) {
      const double finest = per_eps.begin()->second;
      const double next = std::next(per_eps.begin())->second;
      drift = std::abs(finest - next) / next;
    }
    ordered_json s;
    s["max_ratio"] = scan.max_ratio;
    s["argmax_eps"] = scan.rows.empty() ? 0.0 : scan.rows[scan.argmax].eps;
    s["argmax_point"] = scan.rows.empty() ? std::vector<int>{} : scan.rows[scan.argmax].point;
    s["max_on_eps_boundary"] = scan.max_on_eps_boundary;
    if (lemma == Lemma::xesum) {
      s["near_max"] = scan.near_max;
      s["far_max"] = scan.far_max;
    }
    s["max_ratio_by_eps"] = eps_max;
    s["refinement_drift"] = drift;
    doc[name] = s;
    ctx.summary()[name + "_max_ratio"] = scan.max_ratio;
  }
  ctx.write_json(ctx.file(prefix + "lemma_summary.json"), doc);
}

// ---------------------------------------------------------------- commands

int cmd_gen_env(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config();
  CsvWriter csv(ctx.file("environments.csv"),
                {"replica", "stem", "fingerprint", "a_min", "a_max", "a_mean"});
  for (int i = 0; i < c.n_replicas; ++i) {
    const Environment env = sample_environment(c.shape(), c.law, {c.master_seed, static_cast<std::uint32_t>(i)});
    const std::string stem = replica_stem("env", static_cast<std::size_t>(i));
    for (const char* ext : {".zeta.bin", ".a.bin", ".json"}) ctx.file(stem + ext);
    save_environment(ctx.dir(), stem, env);
    const auto [lo, hi] = std::minmax_element(env.a.values.begin(), env.a.values.end());
    double sum = 0.0;
    for (double v : env.a.values) sum += v;
    csv.row({i, stem, env.fingerprint(), *lo, *hi, sum / static_cast<double>(env.a.size())});
  }
  return kExitOk;
}

int cmd_solve_corrector(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config();
  std::vector<std::optional<CorrectorSolution>> sols(static_cast<std::size_t>(c.n_replicas));
  parallel_for(sols.size(), ctx.threads(), [&](std::size_t i) {
    const Environment env = sample_environment(c.shape(), c.law, {c.master_seed, static_cast<std::uint32_t>(i)});
    sols[i] = solve_corrector(env, c.xi, c.mu, c.solver);
  });
  CsvWriter csv(ctx.file("correctors.csv"),
                {"replica", "stem", "iterations", "solver_residual", "residual", "converged", "phi_max_abs"});
  double max_residual = 0.0;
  double max_phi = 0.0;
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const CorrectorSolution& s = *sols[i];
    const std::string stem = replica_stem("corrector", i);
    ctx.file(stem + ".phi.bin");
    ctx.file(stem + ".json");
    save_corrector(ctx.dir(), stem, s);
    csv.row({i, stem, s.report.iterations, s.report.final_rel_residual, s.residual, s.report.converged,
             s.phi.max_abs()});
    max_residual = std::max(max_residual, s.residual);
    max_phi = std::max(max_phi, s.phi.max_abs());
  }
  ctx.summary()["max_residual"] = max_residual;
  ctx.summary()["max_phi_abs"] = max_phi;
  ctx.summary()["residual_within_tolerance"] = max_residual <= c.solver.rel_tol;
  return kExitOk;
}

int cmd_effective_matrix(RunContext& ctx) {
  write_effective_matrix(ctx, "");
  return kExitOk;
}

std::vector<SampleSet> campaign_samples(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config();
  spdlog::info("campaign: {} replicas, {} probes, L={}", c.n_replicas, c.probes().size(), c.L);
  return run_campaign(campaign_of(c, c.probes(), ctx.threads()));
}

int cmd_sample_field(RunContext& ctx) {
  write_samples(ctx, "", campaign_samples(ctx));
  return kExitOk;
}

int cmd_stats(RunContext& ctx) {
  const auto sets = campaign_samples(ctx);
  write_samples(ctx, "", sets);
  return write_stats(ctx, "", sets);
}

int cmd_moment_scan(RunContext& ctx) {
  const auto sets = campaign_samples(ctx);
  write_samples(ctx, "", sets);
  write_moments(ctx, "", sets);
  return kExitOk;
}

int cmd_covariance(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config();
  const CovarianceStage stage = covariance_campaign(ctx);
  write_samples(ctx, "", stage.samples);
  const EffectiveMatrix em = ensemble_effective_matrix(c.shape(), c.law, seeds_of(c), c.solver, ctx.threads());
  ordered_json doc = artifact(ctx);
  doc["A_h"] = matrix_json(em.A_h);
  doc["std_error"] = matrix_json(em.std_error);
  ctx.write_json(ctx.file("effective_matrix.json"), doc);
  write_covariance(ctx, "", stage, em.A_h);
  return kExitOk;
}

int cmd_stein_bound(RunContext& ctx) { return write_stein(ctx, ""); }

int cmd_lemma_check(RunContext& ctx) {
  write_lemmas(ctx, "");
  return kExitOk;
}

int cmd_full_campaign(RunContext& ctx) {
  const EffectiveMatrix em = write_effective_matrix(ctx, "effective-matrix/");
  const CovarianceStage stage = covariance_campaign(ctx);
  write_samples(ctx, "campaign/", stage.samples);
  int status = write_stats(ctx, "campaign/", stage.samples);
  write_moments(ctx, "campaign/", stage.samples);
  write_covariance(ctx, "covariance/", stage, em.A_h);
  status = std::max(status, write_stein(ctx, "stein-bound/"));
  write_lemmas(ctx, "lemma-check/");
  return status;
}

using Command = std::function<int(RunContext&)>;

const std::vector<std::pair<std::string, Command>>& table() {
  static const std::vector<std::pair<std::string, Command>> t = {
      {"gen-env", cmd_gen_env},
      {"solve-corrector", cmd_solve_corrector},
      {"effective-matrix", cmd_effective_matrix},
      {"sample-field", cmd_sample_field},
      {"stats", cmd_stats},
      {"moment-scan", cmd_moment_scan},
      {"covariance", cmd_covariance},
      {"stein-bound", cmd_stein_bound},
      {"lemma-check", cmd_lemma_check},
      {"full-campaign", cmd_full_campaign},
  };
  return t;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, _] : table()) n.push_back(name);
    return n;
  }();
  return names;
}

int run_command(const std::string& name, RunContext& ctx) {
  for (const auto& [n, fn] : table()) {
    if (n == name) return fn(ctx);
  }
  throw ConfigError("unknown subcommand '" + name + "'");
}

}  // namespace corrlab::cli
