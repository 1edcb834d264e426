#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "corrlab/bound_lab.hpp"
#include "corrlab/corrector.hpp"
#include "corrlab/covariance.hpp"
#include "corrlab/errors.hpp"
#include "corrlab/gauss_stats.hpp"
#include "corrlab/lattice.hpp"
#include "corrlab/scaling_field.hpp"
#include "corrlab/sensitivity.hpp"
#include "corrlab/solver.hpp"
#include "corrlab/stein.hpp"
#include "gen.hpp"
#include "json.hpp"

#ifdef CORRLAB_WITH_CLI
#include "corrlab_cli/cli.hpp"
#endif

using namespace corrlab;
using corrlab::testing::Gen;
namespace fs = std::filesystem;

namespace tol {
constexpr double kCalculus = 1e-12;
constexpr int kCalculusCases = 1000;
constexpr double kDenseOracle = 1e-9;
constexpr int kDenseInstances = 20;
constexpr double kConstantPhi = 1e-9;
constexpr double kSpectrumLo = 1.0;
constexpr double kSpectrumHi = 4.0;
constexpr double kOffDiagonalStderr = 3.0;
constexpr double kRescaling = 1e-12;
constexpr double kKernel = 1e-6;
constexpr int kKernelCases = 100;
constexpr double kSmokeWidening = 2.0;
constexpr double kRateSlope = 1.0;
constexpr double kRateSlopeTol = 0.3;
constexpr double kFirstDerivative = 1e-5;
constexpr double kSecondDerivative = 1e-3;
constexpr double kFdStep = 1e-4;
constexpr double kFirstExponentTol = 0.3;
constexpr double kSecondExponentTol = 0.4;
constexpr double kMomentFlatness = 2.0;
constexpr double kLemmaDrift = 0.2;
}  // namespace tol

namespace {

struct Outcome {
  enum Status { pass, fail, inconclusive } status = fail;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

SolverConfig tight_solver() {
  SolverConfig c;
  c.rel_tol = 1e-13;
  return c;
}

// 1 ------------------------------------------------------------------------

Outcome discrete_calculus() {
  Gen gen(1001);
  double worst_adj = 0.0, worst_stencil = 0.0, worst_sym = 0.0;
  for (int c = 0; c < tol::kCalculusCases; ++c) {
    const int d = gen.integer(1, 4);
    const int L = gen.integer(2, d == 4 ? 5 : 7);
    const LatticeShape s(d, L);
    const VertexField f = gen.vertex_field(s), g = gen.vertex_field(s);
    const EdgeField F = gen.edge_field(s);
    const EdgeField grad = gradient(f);
    const VertexField div = divergence(F);
    const double scale_adj = std::sqrt(dot(grad, grad) * dot(F, F)) + std::sqrt(dot(f, f) * dot(div, div));
    worst_adj = std::max(worst_adj, std::abs(dot(grad, F) - dot(f, div)) / scale_adj);

    const VertexField lap = divergence(grad);
    double diff = 0.0, scale = 0.0;
    for (std::size_t v = 0; v < s.num_vertices(); ++v) {
      double ref = 0.0;
      for (int i = 0; i < d; ++i) ref += 2.0 * f[v] - f[s.forward_neighbor(v, i)] - f[s.backward_neighbor(v, i)];
      diff = std::max(diff, std::abs(lap[v] - ref));
      scale = std::max(scale, std::abs(ref));
    }
    worst_stencil = std::max(worst_stencil, diff / std::max(scale, f.max_abs()));

    const EdgeField a = gen.conductances(s, 1.0, 4.0);
    const double mu = c % 2 ? 0.0 : gen.uniform(0.0, 1.0);
    const VertexField Hf = apply_operator(a, mu, f), Hg = apply_operator(a, mu, g);
    const double scale_sym = std::sqrt(dot(g, g) * dot(Hf, Hf)) + std::sqrt(dot(f, f) * dot(Hg, Hg));
    worst_sym = std::max(worst_sym, std::abs(dot(g, Hf) - dot(f, Hg)) / scale_sym);
  }
  const bool ok = worst_adj <= tol::kCalculus && worst_stencil <= tol::kCalculus && worst_sym <= tol::kCalculus;
  return verdict(ok, fmt("%d cases; max rel err adjoint %.2e, stencil %.2e, symmetry %.2e (tol %.0e)",
                         tol::kCalculusCases, worst_adj, worst_stencil, worst_sym, tol::kCalculus));
}

// 2 ------------------------------------------------------------------------

Outcome solver_vs_dense() {
  Gen gen(2002);
  const LatticeShape s(3, 3);
  double worst = 0.0;
  for (int k = 0; k < tol::kDenseInstances; ++k) {
    const double mu = k % 2 ? 0.5 : 0.0;
    const EdgeField a = gen.conductances(s, 1.0, 4.0);
    VertexField g = gen.vertex_field(s);
    if (mu == 0.0) project_mean_zero(g.values);
    SolverConfig cfg = tight_solver();
    cfg.preconditioner = static_cast<Preconditioner>(k % 3);
    const SolveResult r = solve(a, 2.0, mu, g, cfg);
    const VertexField u = dense_oracle_solve(a, mu, g);
    double diff = 0.0;
    for (std::size_t v = 0; v < u.size(); ++v) diff = std::max(diff, std::abs(r.u[v] - u[v]));
    worst = std::max(worst, diff / u.max_abs());
  }
  return verdict(worst <= tol::kDenseOracle,
                 fmt("%d instances (d=3, L=3, mu in {0, 0.5}); max rel err %.2e (tol %.0e)", tol::kDenseInstances,
                     worst, tol::kDenseOracle));
}

// 3 ------------------------------------------------------------------------

Outcome constant_environment() {
  ConductanceLaw law;
  law.lambda_min = law.lambda_max = 2.5;
  const LatticeShape s(3, 8);
  const Environment env = sample_environment(s, law, {3, 0});
  const std::vector<CorrectorSolution> basis = solve_basis_correctors(env, 0.0, SolverConfig{});
  double phi_max = 0.0;
  for (const auto& c : basis) phi_max = std::max(phi_max, c.phi.max_abs());
  const Eigen::MatrixXd A = effective_matrix(env, basis);
  const bool a_exact = A == 2.5 * Eigen::MatrixXd::Identity(3, 3);

  const TestFunction f(TestFunctionKind::mollifier_bump, 3);
  const VertexField u = adjoint_field(env, f, 1.0, 0.5, SolverConfig{});
  const DerivativeField d1 = first_derivatives_all_edges(env, basis[0], u);
  double deriv_max = d1.values.max_abs();
  for (std::size_t anchor : {std::size_t{0}, std::size_t{77}, std::size_t{1000}}) {
    deriv_max = std::max(deriv_max, second_derivative_row(env, basis[0], u, anchor, SolverConfig{}).values.max_abs());
  }

  SteinConfig sc;
  sc.campaign.shape = s;
  sc.campaign.law = law;
  sc.campaign.probes = {{0.5, 1.0}};
  sc.campaign.n_replicas = 16;
  sc.anchors = 8;
  const SteinRun run = stein_bound(sc);
  const double bound = run.reports[0].bound;
  const bool ok = phi_max <= tol::kConstantPhi && a_exact && deriv_max == 0.0 && bound == 0.0;
  return verdict(ok, fmt("|phi|_inf %.1e, A_h == 2.5 Id exactly: %s, max |derivative| %.1e, Stein bound %.1e",
                         phi_max, a_exact ? "yes" : "no", deriv_max, bound));
}

// 4 ------------------------------------------------------------------------

Outcome effective_matrix_sanity() {
  ConductanceLaw law;
  law.lambda_min = 1.0;
  law.lambda_max = 4.0;
  std::vector<SeedSpec> seeds;
  for (std::uint32_t r = 0; r < 32; ++r) seeds.push_back({4004, r});
  const EffectiveMatrix em = ensemble_effective_matrix(LatticeShape(3, 16), law, seeds, SolverConfig{});
  const Eigen::MatrixXd sym = 0.5 * (em.A_h + em.A_h.transpose());
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues();
  double worst_z = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) worst_z = std::max(worst_z, std::abs(em.A_h(i, j)) / em.std_error(i, j));
    }
  }
  const bool ok = ev.minCoeff() >= tol::kSpectrumLo && ev.maxCoeff() <= tol::kSpectrumHi &&
                  worst_z <= tol::kOffDiagonalStderr;
  return verdict(ok, fmt("L=16, 32 replicas; spectrum [%.4f, %.4f] in [1, 4]; max |offdiag|/stderr %.2f (tol %.0f)",
                         ev.minCoeff(), ev.maxCoeff(), worst_z, tol::kOffDiagonalStderr));
}

// 5 ------------------------------------------------------------------------

Outcome rescaling_identity() {
  const LatticeShape s(3, 64);
  ConductanceLaw law;
  const Environment env = sample_environment(s, law, {5005, 0});
  const fs::path dir = fs::temp_directory_path() / "corrlab_acceptance_rescaling";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_corrector(dir, "corrector", solve_corrector(env, std::vector<double>{1.0, 0.0, 0.0}, 0.0, SolverConfig{}));
  const CorrectorSolution stored = load_corrector(dir, "corrector");
  fs::remove_all(dir);

  int checked = 0, skipped = 0;
  double worst = 0.0;
  for (const TestFunctionKind kind : {TestFunctionKind::mollifier_bump, TestFunctionKind::product_bump}) {
    const TestFunction f(kind, 3);
    for (double eps : {0.25, 0.125, 0.0625, 0.03125}) {
      for (double lambda : {1.0, 0.5, 0.25}) {
        if (lambda * f.support_extent() / eps >= 0.5 * s.L) {
          ++skipped;
          continue;
        }
        const double lhs = phi_eps_value(stored.phi, f, lambda, eps);
        const double rhs = std::pow(lambda, 1.0 - 1.5) * phi_eps_value(stored.phi, f, 1.0, eps / lambda);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)));
        ++checked;
      }
    }
  }
  return verdict(worst <= tol::kRescaling,
                 fmt("%d (eps, lambda, f) points on a stored L=64 corrector (%d inadmissible skipped); max rel err "
                     "%.2e (tol %.0e)",
                     checked, skipped, worst, tol::kRescaling));
}

// 6 ------------------------------------------------------------------------

Eigen::MatrixXd random_spd(Gen& gen, int d, double lo, double hi) {
  Eigen::MatrixXd M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = gen.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  const Eigen::MatrixXd R = qr.householderQ();
  Eigen::VectorXd ev(d);
  for (int i = 0; i < d; ++i) ev(i) = gen.uniform(lo, hi);
  return R * ev.asDiagonal() * R.transpose();
}

Outcome kernel_homogeneity() {
  Gen gen(6006);
  double worst_h = 0.0, worst_iso = 0.0;
  for (int c = 0; c < tol::kKernelCases; ++c) {
    const int d = 3 + c % 3;
    const CovarianceModel m{random_spd(gen, d, 0.5, 4.0), random_spd(gen, d, 0.0, 2.0)};
    std::vector<double> x(static_cast<std::size_t>(d)), x2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = gen.uniform(-3.0, 3.0);
      x2[i] = 2.0 * x[i];
    }
    const double k1 = std::pow(2.0, 2.0 - d) * kernel_K(m, x), k2 = kernel_K(m, x2);
    worst_h = std::max(worst_h, std::abs(k2 - k1) / std::max(std::abs(k1), std::abs(k2)));
  }
  for (int c = 0; c < tol::kKernelCases; ++c) {
    const Eigen::MatrixXd A = random_spd(gen, 3, 0.5, 4.0);
    const double q = gen.uniform(0.1, 3.0);
    const CovarianceModel m{A, q * A};
    const std::vector<double> x{gen.uniform(-3.0, 3.0), gen.uniform(-3.0, 3.0), gen.uniform(-3.0, 3.0)};
    const double G = q * homogenized_green(A, x);
    worst_iso = std::max(worst_iso, std::abs(kernel_K(m, x) - G) / std::abs(G));
  }
  const bool ok = worst_h <= tol::kKernel && worst_iso <= tol::kKernel;
  return verdict(ok, fmt("%d random (x, Q, A_h) in d=3..5: max rel err %.2e; K = qG in d=3: %.2e (tol %.0e)",
                         tol::kKernelCases, worst_h, worst_iso, tol::kKernel));
}

// 7 and 8 -------------------------------------------------------------------

struct JointCampaign {
  int L = 0;
  std::vector<SampleSet> samples;
  std::vector<StatsReport> stats;
  Eigen::MatrixXd A_h;
  QFit fit;
  std::vector<double> sigma2_pred;
  double sigma2_continuum = 0.0;
  RateFit rate;
};

const JointCampaign& joint_campaign(bool full) {
  static std::optional<JointCampaign> cache;
  if (cache) return *cache;
  JointCampaign jc;
  jc.L = full ? 128 : 64;
  const std::uint64_t seed = 7007;
  CampaignConfig cc;
  cc.shape = LatticeShape(3, jc.L);
  cc.n_replicas = 200;
  cc.master_seed = seed;
  std::vector<double> eps{0.25, 0.125, 0.0625};
  if (full) eps.push_back(0.03125);
  for (double e : eps) cc.probes.push_back({e, 1.0});
  CovarianceAccumulator acc(cc.shape);
  jc.samples = run_campaign(cc, [&](std::size_t, const Environment&, const CorrectorSolution& c) { acc.add(c.phi); });
  for (std::size_t k = 0; k < jc.samples.size(); ++k) {
    jc.stats.push_back(compute_stats(jc.samples[k].values, {1000, 0.95, seed, static_cast<std::uint32_t>(k)}, 400));
  }
  std::vector<SeedSpec> seeds;
  for (std::uint32_t r = 0; r < 8; ++r) seeds.push_back({seed, r});
  jc.A_h = ensemble_effective_matrix(cc.shape, cc.law, seeds, cc.solver).A_h;
  jc.fit = fit_Q(acc.table(), jc.A_h);
  for (double e : eps) jc.sigma2_pred.push_back(sigma2_periodic(cc.shape, jc.fit.model, cc.f, 1.0, e));
  jc.sigma2_continuum = sigma2(jc.fit.model, cc.f, 1.0).value;
  jc.rate = rate_fit_campaign(jc.samples, 3, {1000, 0.95, seed, 0x100}, 400);
  cache = std::move(jc);
  return *cache;
}

Interval widen(double centre, const Interval& ci, double w) {
  return {centre - w * (centre - ci.lo), centre + w * (ci.hi - centre)};
}

Outcome variance_convergence(bool full) {
  const JointCampaign& jc = joint_campaign(full);
  const double w = full ? 1.0 : tol::kSmokeWidening;
  std::string detail = fmt("L=%d, 200 replicas, CI widening %.0fx; var:", jc.L, w);
  bool cauchy = true;
  for (std::size_t k = 0; k < jc.stats.size(); ++k) {
    const StatsReport& s = jc.stats[k];
    detail += fmt(" eps=1/%.0f %.5f [%.5f, %.5f] (pred %.5f);", 1.0 / jc.samples[k].probe.eps, s.variance,
                  s.variance_ci.lo, s.variance_ci.hi, jc.sigma2_pred[k]);
    if (k > 0) {
      const Interval a = widen(jc.stats[k - 1].variance, jc.stats[k - 1].variance_ci, w);
      const Interval b = widen(s.variance, s.variance_ci, w);
      cauchy = cauchy && a.lo <= b.hi && b.lo <= a.hi;
    }
  }
  const StatsReport& last = jc.stats.back();
  const Interval ci = widen(last.variance, last.variance_ci, w);
  const double pred = jc.sigma2_pred.back();
  const bool covered = ci.lo <= pred && pred <= ci.hi;
  detail += fmt(" consecutive CIs overlap: %s; fitted-Q prediction %.5f in [%.5f, %.5f]: %s; continuum sigma2 %.5f",
                cauchy ? "yes" : "no", pred, ci.lo, ci.hi, covered ? "yes" : "no", jc.sigma2_continuum);
  return verdict(cauchy && covered, detail);
}

Outcome gaussianity_rate(bool full) {
  const JointCampaign& jc = joint_campaign(full);
  const RateFit& r = jc.rate;
  std::string detail = "dK (mask):";
  for (std::size_t k = 0; k < r.eps_grid.size(); ++k) {
    detail += fmt(" eps=1/%.0f %.4f%s (floor %.4f);", 1.0 / r.eps_grid[k], r.dK_values[k], r.mask[k] ? "" : " masked",
                  jc.stats[k].noise_floor);
  }
  if (r.status == FitStatus::inconclusive) {
    const RateFit all = rate_fit(r.eps_grid, r.dK_values, 3);
    detail += fmt(" %d point(s) above the noise floor, fewer than 3; unmasked fit for reference: slope %.3f over %d "
                  "points (target %.1f +- %.1f)",
                  r.n_used, all.slope, all.n_used, tol::kRateSlope, tol::kRateSlopeTol);
    return {Outcome::inconclusive, detail};
  }
  const bool ok = std::abs(r.slope - tol::kRateSlope) <= tol::kRateSlopeTol;
  detail += fmt(" slope %.3f CI [%.3f, %.3f] over %d points (target %.1f +- %.1f)", r.slope, r.slope_ci.lo,
                r.slope_ci.hi, r.n_used, tol::kRateSlope, tol::kRateSlopeTol);
  return verdict(ok, detail);
}

// 9 ------------------------------------------------------------------------

Outcome malliavin_vs_fd() {
  const std::vector<double> xi{1.0, 0.0, 0.0};
  const TestFunction f(TestFunctionKind::mollifier_bump, 3);
  const SolverConfig cfg = tight_solver();
  const double h = tol::kFdStep;
  auto first = [&](const Environment& e) {
    const CorrectorSolution c = solve_corrector(e, xi, 0.0, cfg);
    return first_derivatives_all_edges(e, c, adjoint_field(e, f, 1.0, 0.5, cfg)).values;
  };
  auto functional = [&](const Environment& e) {
    return phi_eps_value(solve_corrector(e, xi, 0.0, cfg).phi, f, 1.0, 0.5);
  };
  double worst1 = 0.0, worst2 = 0.0;
  int n1 = 0, n2 = 0;
  for (int L : {6, 8}) {
    const Environment env = sample_environment(LatticeShape(3, L), ConductanceLaw{}, {9009, static_cast<std::uint32_t>(L)});
    const EdgeField d1 = first(env);
    std::vector<std::size_t> strong;
    for (std::size_t e = 0; e < d1.size(); ++e) {
      if (std::abs(d1[e]) >= 0.1 * d1.max_abs()) strong.push_back(e);
    }
    for (int k = 0; k < 10; ++k) {
      const std::size_t e = strong[static_cast<std::size_t>(k) * strong.size() / 10];
      const double fd = (functional(perturb_edge(env, e, h)) - functional(perturb_edge(env, e, -h))) / (2.0 * h);
      worst1 = std::max(worst1, std::abs(d1[e] - fd) / std::abs(fd));
      ++n1;
    }
    const CorrectorSolution c = solve_corrector(env, xi, 0.0, cfg);
    const VertexField u = adjoint_field(env, f, 1.0, 0.5, cfg);
    const int pairs = L == 6 ? 3 : 2;
    for (int k = 0; k < pairs; ++k) {
      const std::size_t anchor = strong[static_cast<std::size_t>(2 * k + 1) * strong.size() / (2 * pairs)];
      const EdgeField row = second_derivative_row(env, c, u, anchor, cfg).values;
      std::size_t e = anchor;
      if (k > 0) {
        double best = -1.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
          if (j != anchor && std::abs(row[j]) > best) {
            best = std::abs(row[j]);
            e = j;
          }
        }
      }
      const EdgeField plus = first(perturb_edge(env, anchor, h)), minus = first(perturb_edge(env, anchor, -h));
      const double fd = (plus[e] - minus[e]) / (2.0 * h);
      worst2 = std::max(worst2, std::abs(row[e] - fd) / std::abs(fd));
      ++n2;
    }
  }
  const bool ok = worst1 <= tol::kFirstDerivative && worst2 <= tol::kSecondDerivative;
  return verdict(ok, fmt("L in {6, 8}: first order %d edges max rel err %.2e (tol %.0e); second order %d pairs %.2e "
                         "(tol %.0e)",
                         n1, worst1, tol::kFirstDerivative, n2, worst2, tol::kSecondDerivative));
}

// 10 -----------------------------------------------------------------------

Outcome decay_exponents() {
  DecayStudyConfig cfg;
  cfg.shape = LatticeShape(3, 32);
  cfg.n_replicas = 64;
  cfg.master_seed = 10010;
  const DecayStudy s = decay_study(cfg);
  const double e1 = s.first_fit.exponent, e2 = s.second_fit.exponent;
  const bool ok = s.first_fit.status == FitStatus::ok && s.second_fit.status == FitStatus::ok &&
                  std::abs(e1 + 2.0) <= tol::kFirstExponentTol && std::abs(e2 + 3.0) <= tol::kSecondExponentTol;
  return verdict(ok, fmt("L=32, 64 replicas, fit over r in [2, 8]: first %.3f (target -2 +- %.1f, %d bins), second "
                         "%.3f (target -3 +- %.1f, %d bins)",
                         e1, tol::kFirstExponentTol, s.first_fit.n_bins, e2, tol::kSecondExponentTol,
                         s.second_fit.n_bins));
}

// 11 -----------------------------------------------------------------------

Outcome stein_dominance() {
  SteinConfig sc;
  sc.campaign.shape = LatticeShape(3, 32);
  sc.campaign.n_replicas = 32;
  sc.campaign.master_seed = 11011;
  sc.campaign.probes = {{0.25, 1.0}, {0.125, 1.0}};
  sc.anchors = 16;
  const SteinRun run = stein_bound(sc);
  bool ok = true;
  std::string detail = "L=32, 32 replicas, 16 anchors:";
  for (std::size_t k = 0; k < run.reports.size(); ++k) {
    const StatsReport st =
        compute_stats(run.samples[k].values, {1000, 0.95, sc.campaign.master_seed, static_cast<std::uint32_t>(k)}, 400);
    const Dominance d = check_dominance(st, run.reports[k]);
    ok = ok && d.holds;
    detail += fmt(" eps=1/%.0f dK %.4f <= bound %.4f + %.4f: %s;", 1.0 / run.reports[k].probe.eps, d.dK, d.bound,
                  d.combined, d.holds ? "yes" : "no");
  }
  return verdict(ok, detail);
}

// 12 -----------------------------------------------------------------------

Outcome moment_scaling() {
  CampaignConfig cc;
  cc.shape = LatticeShape(3, 32);
  cc.n_replicas = 64;
  cc.master_seed = 12012;
  for (double lambda : {1.0, 0.5, 0.25}) cc.probes.push_back({0.125, lambda});
  const std::vector<SampleSet> sets = run_campaign(cc);
  const std::vector<int> ps{2, 4};
  const std::vector<MomentRow> rows = moment_scan(sets, ps, 3, {1000, 0.95, cc.master_seed, 0});
  bool ok = true;
  std::string detail = "eps=1/8, lambda in {1, 1/2, 1/4}, 64 replicas:";
  for (int p : ps) {
    double lo = INFINITY, hi = 0.0;
    for (const MomentRow& r : rows) {
      if (r.p != p) continue;
      lo = std::min(lo, r.normalized);
      hi = std::max(hi, r.normalized);
    }
    ok = ok && hi / lo <= tol::kMomentFlatness;
    detail += fmt(" p=%d normalized in [%.4f, %.4f], ratio %.3f;", p, lo, hi, hi / lo);
  }
  detail += fmt(" (tol %.0fx)", tol::kMomentFlatness);
  return verdict(ok, detail);
}

// 13 -----------------------------------------------------------------------

Outcome lemma_scans() {
  const int origin[3] = {0, 0, 0};
  const LemmaCheck unit = xesum_check(3, origin, 1.0);
  const bool exact = unit.lhs == 2.5 && unit.rhs == 1.0 && unit.points == 7;

  ScanGrid x;
  x.eps = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  x.scaled_norms = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
  x.directions = {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}};
  ScanGrid y;
  y.eps = {1.0 / 8, 1.0 / 16, 1.0 / 32};
  y.p_list = {4.0, 3.0};
  y.scaled_norms = {0.0, 1.0, 2.0};
  y.directions = {{1, 0, 0}, {1, 1, 1}};

  bool ok = exact;
  std::string detail = fmt("eps=1 case lhs %.17g rhs %g (exact 2.5, 1);", unit.lhs, unit.rhs);
  for (const auto& [lemma, grid] : {std::pair{Lemma::xesum, x}, std::pair{Lemma::eepsum, y}}) {
    const BoundScan s = constant_scan(lemma, grid);
    std::vector<double> by_eps(grid.eps.size(), 0.0);
    for (const ScanRow& row : s.rows) {
      const auto i = static_cast<std::size_t>(std::find(grid.eps.begin(), grid.eps.end(), row.eps) - grid.eps.begin());
      by_eps[i] = std::max(by_eps[i], row.check.ratio);
    }
    const double fine = by_eps.back(), coarse = by_eps[by_eps.size() - 2];
    const double drift = std::abs(fine - coarse) / coarse;
    ok = ok && std::isfinite(s.max_ratio) && drift < tol::kLemmaDrift;
    detail += fmt(" %s max ratio %.3f, drift between the two finest eps %.1f%%;", std::string(to_string(lemma)).c_str(),
                  s.max_ratio, 100.0 * drift);
  }
  detail += fmt(" (tol %.0f%%)", 100.0 * tol::kLemmaDrift);
  return verdict(ok, detail);
}

// 14 -----------------------------------------------------------------------

#ifdef CORRLAB_WITH_CLI
std::vector<std::pair<std::string, std::string>> data_files(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    out.emplace_back(fs::relative(entry.path(), root).generic_string(),
                     std::string(std::istreambuf_iterator<char>(in), {}));
  }
  std::sort(out.begin(), out.end());
  return out;
}
#endif

Outcome determinism() {
#ifdef CORRLAB_WITH_CLI
  const fs::path dir = fs::temp_directory_path() / "corrlab_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const nlohmann::json cfg = {
      {"L", 32},
      {"n_replicas", 16},
      {"eps_list", {0.25, 0.125}},
      {"master_seed", 14014},
      {"stein", {{"m", 8}}},
      {"bootstrap", {{"resamples", 200}, {"noise_simulations", 100}}},
      {"lemma", {{"xesum", {{"eps", {0.25, 0.125}}}}, {"eepsum", {{"eps", {0.25}}}}}},
  };
  std::ofstream(dir / "config.json") << cfg.dump();
  std::vector<int> codes;
  std::ostringstream sink;
  auto* saved = std::cout.rdbuf(sink.rdbuf());
  for (const char* run : {"a", "b"}) {
    codes.push_back(cli::run_cli({"--config", (dir / "config.json").string(), "--output", (dir / run).string(),
                                  "--threads", "2", "--log-level", "error", "full-campaign"}));
  }
  std::cout.rdbuf(saved);
  const auto a = data_files(dir / "a"), b = data_files(dir / "b");
  std::size_t bytes = 0;
  for (const auto& [_, data] : a) bytes += data.size();
  fs::remove_all(dir);
  const bool ran = codes[0] == codes[1] && (codes[0] == 0 || codes[0] == 5);
  const bool same = !a.empty() && a == b;
  return verdict(ran && same, fmt("full-campaign twice with 2 threads: exit codes %d/%d, %zu data files (%zu bytes) "
                                  "byte-identical: %s",
                                  codes[0], codes[1], a.size(), bytes, same ? "yes" : "no"));
#else
  return {Outcome::fail, "command-line tool not built; determinism of run directories cannot be checked"};
#endif
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the corrector laboratory"};
  bool full = false;
  std::vector<int> only;
  app.add_flag("--full", full, "Run the variance study at L=128 instead of the L=64 smoke version");
  app.add_option("--only", only, "Run only the listed criteria")->check(CLI::Range(1, 14));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "discrete-calculus", discrete_calculus},
      {2, "solver-vs-dense-oracle", solver_vs_dense},
      {3, "constant-environment", constant_environment},
      {4, "effective-matrix-sanity", effective_matrix_sanity},
      {5, "rescaling-identity", rescaling_identity},
      {6, "kernel-homogeneity", kernel_homogeneity},
      {7, full ? "variance-convergence" : "variance-convergence-smoke", [full] { return variance_convergence(full); }},
      {8, "gaussianity-rate", [full] { return gaussianity_rate(full); }},
      {9, "malliavin-vs-fd", malliavin_vs_fd},
      {10, "decay-exponents", decay_exponents},
      {11, "stein-dominance", stein_dominance},
      {12, "moment-scaling", moment_scaling},
      {13, "lemma-scans", lemma_scans},
      {14, "determinism", determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "INCONCLUSIVE";
    if (o.status == Outcome::fail) ++failures;
    std::printf("%-12s %2d %-28s %8.1fs  %s\n", tag, c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
