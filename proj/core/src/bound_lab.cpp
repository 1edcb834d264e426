#include "corrlab/bound_lab.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "corrlab/errors.hpp"
#include "corrlab/parallel.hpp"

namespace corrlab {

double max_summation_radius(int d) {
  switch (d) {
    case 3:
      return 128.0;
    case 4:
      return 40.0;
    case 5:
      return 18.0;
    default:
      return std::pow(1e7, 1.0 / d);
  }
}

namespace {

double norm_of(std::span<const int> v) {
  double s = 0.0;
  for (int x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

/// Calls fn(x, |x|^2) for every lattice point with |x|^2 <= r2, lexicographic order.
template <typename Fn>
std::size_t for_each_in_ball(int d, double radius, Fn&& fn) {
  const auto r2 = static_cast<long long>(std::floor(radius * radius * (1.0 + 1e-12)));
  const int rmax = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2))));
  std::vector<int> x(static_cast<std::size_t>(d), -rmax);
  std::size_t count = 0;
  // Odometer over the first d-1 coordinates; the last one spans its exact chord.
  for (;;) {
    long long partial = 0;
    for (int i = 0; i + 1 < d; ++i) partial += static_cast<long long>(x[static_cast<std::size_t>(i)]) * x[static_cast<std::size_t>(i)];
    if (partial <= r2) {
      int h = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2 - partial))));
      while (static_cast<long long>(h + 1) * (h + 1) <= r2 - partial) ++h;
      while (static_cast<long long>(h) * h > r2 - partial) --h;
      for (int t = -h; t <= h; ++t) {
        x[static_cast<std::size_t>(d - 1)] = t;
        fn(std::span<const int>(x), partial + static_cast<long long>(t) * t);
        ++count;
      }
    }
    int i = d - 2;
    while (i >= 0 && ++x[static_cast<std::size_t>(i)] > rmax) x[static_cast<std::size_t>(i--)] = -rmax;
    if (i < 0) break;
  }
  return count;
}

void check_point(int d, std::span<const int> e) {
  if (d < 3) throw PreconditionError("lemma checks require d >= 3");
  if (e.size() != static_cast<std::size_t>(d)) throw PreconditionError("lattice point must have d components");
}

}  // namespace

LemmaCheck xesum_check(int d, std::span<const int> e, double eps) {
  check_point(d, e);
  if (!(eps > 0.0 && eps <= 1.0)) throw PreconditionError("eps must lie in (0, 1]");
  const double radius = 1.0 / eps;
  if (radius > max_summation_radius(d)) {
    throw GuardError("ball radius " + std::to_string(radius) + " exceeds the exact-summation limit " +
                     std::to_string(max_summation_radius(d)) + " for d = " + std::to_string(d));
  }
  LemmaCheck c;
  const double expo = 1.0 - d;
  c.points = for_each_in_ball(d, radius, [&](std::span<const int> x, long long) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = static_cast<double>(x[i] - e[i]);
      r2 += t * t;
    }
    c.lhs += std::pow(1.0 + std::sqrt(r2), expo);
  });
  c.rhs = radius / std::pow(1.0 + eps * norm_of(e), d - 1.0);
  c.ratio = c.lhs / c.rhs;
  return c;
}

double eepsum_rhs(int d, double p, std::span<const int> e_prime, double eps) {
  const double l = std::abs(std::log(eps));
  const double base = 1.0 + eps * norm_of(e_prime);
  return l / std::pow(base, d) + l / std::pow(base, p);
}

LemmaCheck eepsum_check(int d, double p, std::span<const int> e_prime, double eps, double radius) {
  check_point(d, e_prime);
  if (!(p > 0.0)) throw PreconditionError("eepsum needs p > 0");
  if (!(eps > 0.0 && eps <= 0.5)) throw PreconditionError("eps must lie in (0, 1/2]");
  if (radius < 4.0 / eps * (1.0 - 1e-12)) {
    throw GuardError("summation radius " + std::to_string(radius) + " below the required 4/eps = " +
                     std::to_string(4.0 / eps));
  }
  if (radius > max_summation_radius(d)) {
    throw GuardError("summation radius " + std::to_string(radius) + " exceeds the exact-summation limit " +
                     std::to_string(max_summation_radius(d)) + " for d = " + std::to_string(d));
  }
  LemmaCheck c;
  const double dd = d;
  c.points = for_each_in_ball(d, radius, [&](std::span<const int> x, long long n2) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = static_cast<double>(x[i] - e_prime[i]);
      r2 += t * t;
    }
    c.lhs += std::pow(1.0 + std::sqrt(r2), -dd) * std::pow(1.0 + eps * std::sqrt(static_cast<double>(n2)), -p);
  });
  // Points outside the ball: each unit cube around e lies in |x| > R - sqrt(d)/2 and
  // the summand is bounded by h(|x| - sqrt(d)/2), h decreasing.
  const double shift = 0.5 * std::sqrt(dd);
  const double ep = norm_of(e_prime);
  auto h = [&](double s) {
    return std::pow(1.0 + std::max(0.0, s - ep), -dd) * std::pow(1.0 + eps * std::max(0.0, s), -p);
  };
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * dd) / std::tgamma(0.5 * dd);
  const double a = radius - shift;
  boost::math::quadrature::exp_sinh<double> integrator;
  const double tail_integral = integrator.integrate(
      [&](double t) {
        const double rho = a + t;
        return std::pow(rho, dd - 1.0) * h(rho - shift);
      },
      0.0, std::numeric_limits<double>::infinity());
  c.tail = sphere * tail_integral;
  c.lhs += c.tail;
  c.rhs = eepsum_rhs(d, p, e_prime, eps);
  c.ratio = c.lhs / c.rhs;
  return c;
}

std::string_view to_string(Lemma lemma) { return lemma == Lemma::xesum ? "xesum" : "eepsum"; }

Lemma parse_lemma(std::string_view name) {
  if (name == "xesum") return Lemma::xesum;
  if (name == "eepsum") return Lemma::eepsum;
  throw ConfigError("unknown lemma '" + std::string(name) + "'");
}

BoundScan constant_scan(Lemma lemma, const ScanGrid& grid, int threads) {
  if (grid.eps.empty() || grid.scaled_norms.empty() || grid.directions.empty()) {
    throw ConfigError("scan grid needs eps values, norms and directions");
  }
  if (lemma == Lemma::eepsum && grid.p_list.empty()) throw ConfigError("eepsum scan needs a p list");
  BoundScan scan;
  scan.lemma = lemma;
  scan.d = grid.d;
  const std::vector<double> ps = lemma == Lemma::eepsum ? grid.p_list : std::vector<double>{0.0};
  for (double eps : grid.eps) {
    for (double p : ps) {
      for (double t : grid.scaled_norms) {
        for (const auto& dir : grid.directions) {
          if (dir.size() != static_cast<std::size_t>(grid.d)) throw ConfigError("direction must have d components");
          const double n = norm_of(dir);
          if (n == 0.0) throw ConfigError("direction must be nonzero");
          ScanRow row;
          row.eps = eps;
          row.p = p;
          row.radius = lemma == Lemma::eepsum ? grid.radius_factor / eps : 1.0 / eps;
          for (int c : dir) row.point.push_back(static_cast<int>(std::lround(t / eps * c / n)));
          scan.rows.push_back(std::move(row));
        }
      }
    }
  }
  parallel_for(scan.rows.size(), threads, [&](std::size_t i) {
    ScanRow& row = scan.rows[i];
    row.check = lemma == Lemma::xesum ? xesum_check(grid.d, row.point, row.eps)
                                      : eepsum_check(grid.d, row.p, row.point, row.eps, row.radius);
    if (!(std::isfinite(row.check.ratio) && row.check.ratio > 0.0)) {
      throw Error("non-finite or non-positive ratio in lemma scan");
    }
  });
  const double eps_lo = *std::min_element(grid.eps.begin(), grid.eps.end());
  const double eps_hi = *std::max_element(grid.eps.begin(), grid.eps.end());
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    const auto& row = scan.rows[i];
    if (row.check.ratio > scan.max_ratio) {
      scan.max_ratio = row.check.ratio;
      scan.argmax = i;
    }
    if (lemma == Lemma::xesum) {
      const bool far = row.eps * norm_of(row.point) > 2.0;
      double& m = far ? scan.far_max : scan.near_max;
      m = std::max(m, row.check.ratio);
    }
  }
  const double best = scan.rows[scan.argmax].eps;
  scan.max_on_eps_boundary = grid.eps.size() > 1 && (best == eps_lo || best == eps_hi);
  return scan;
}

}  // namespace corrlab
