#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "corrlab/errors.hpp"
#include "corrlab/scaling_field.hpp"
#include "gen.hpp"

using namespace corrlab;
using corrlab::testing::Gen;
using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

namespace {

Eigen::MatrixXd random_spd(Gen& gen, int d, double floor) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = gen.normal();
  }
  return m * m.transpose() / d + floor * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd inv_sqrt(const Eigen::MatrixXd& A) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

// Solution of -div A grad B = G_A, whose Q-weighted Hessian gives the kernel.
double biharmonic_potential(const Eigen::MatrixXd& A, const Eigen::VectorXd& x) {
  const int d = static_cast<int>(A.rows());
  const double cd = std::tgamma(0.5 * d - 1.0) / (4.0 * std::pow(std::numbers::pi, 0.5 * d));
  const double r = (inv_sqrt(A) * x).norm();
  return -cd * std::pow(r, 4.0 - d) / (2.0 * (4.0 - d)) / std::sqrt(A.determinant());
}

double kernel_by_differences(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q, const Eigen::VectorXd& x, double h) {
  const int d = static_cast<int>(A.rows());
  double k = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd ei = Eigen::VectorXd::Unit(d, i) * h, ej = Eigen::VectorXd::Unit(d, j) * h;
      const double dij = (biharmonic_potential(A, x + ei + ej) - biharmonic_potential(A, x + ei - ej) -
                          biharmonic_potential(A, x - ei + ej) + biharmonic_potential(A, x - ei - ej)) /
                         (4.0 * h * h);
      k -= Q(i, j) * dij;
    }
  }
  return k;
}

// Richardson extrapolation of the central differences: O(h^4).
double kernel_by_differences(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q, const Eigen::VectorXd& x) {
  const double h = 1e-2 * x.norm();
  return (4.0 * kernel_by_differences(A, Q, x, 0.5 * h) - kernel_by_differences(A, Q, x, h)) / 3.0;
}

std::vector<double> as_vec(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

}  // namespace

TEST(TestFunction, UnitIntegral) {
  for (const TestFunctionKind kind : {TestFunctionKind::mollifier_bump, TestFunctionKind::product_bump}) {
    const TestFunction f(kind, 3);
    const double h = 0.02;
    double sum = 0.0;
    for (int i = -50; i <= 50; ++i) {
      for (int j = -50; j <= 50; ++j) {
        for (int k = -50; k <= 50; ++k) {
          const double x[3] = {i * h, j * h, k * h};
          sum += f.value(x);
        }
      }
    }
    EXPECT_NEAR(sum * h * h * h, 1.0, 1e-6) << to_string(kind);
  }
}

TEST(TestFunction, SupportAndScaling) {
  const TestFunction f(TestFunctionKind::mollifier_bump, 3, {0.5, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(f.support_extent(), 1.5);
  const double out[3] = {-0.6, 0.0, 0.0};
  EXPECT_EQ(f.value(out), 0.0);
  const double x[3] = {0.3, 0.1, -0.2};
  const std::vector<double> half{0.15, 0.05, -0.1};
  EXPECT_DOUBLE_EQ(f.scaled_value(x, 2.0), f.value(half) / 8.0);
  EXPECT_THROW(parse_test_function_kind("gaussian"), ConfigError);
}

TEST(TestFunction, MollifierTransformMatchesRadialIntegral) {
  const TestFunction f(TestFunctionKind::mollifier_bump, 3);
  auto radial = [&](double r) {
    const double x[3] = {r, 0.0, 0.0};
    return f.value(x);
  };
  for (double rho : {0.0, 0.7, 2.5, 6.0, 15.0, 40.0}) {
    const double ref = GK::integrate(
        [&](double r) {
          const double s = rho == 0.0 ? 1.0 : std::sin(rho * r) / (rho * r);
          return 4.0 * std::numbers::pi * r * r * radial(r) * s;
        },
        0.0, 1.0, 15, 1e-14);
    const double p[3] = {0.0, rho, 0.0};
    EXPECT_NEAR(f.radial_fourier(rho), ref, 1e-12) << rho;
    EXPECT_NEAR(f.fourier_abs2(p), ref * ref, 1e-12) << rho;
  }
}

TEST(TestFunction, ProductTransformFactorizes) {
  const TestFunction f(TestFunctionKind::product_bump, 3);
  const double sd = std::sqrt(3.0);
  const double mass = GK::integrate([](double s) { return bump_profile(s * s); }, -1.0, 1.0, 15, 1e-15);
  auto factor = [&](double q) {
    return GK::integrate([&](double s) { return bump_profile(s * s) * std::cos(q * s / sd); }, -1.0, 1.0, 15,
                         1e-15) /
           mass;
  };
  for (const auto& p : std::vector<std::array<double, 3>>{{0.0, 0.0, 0.0}, {1.0, -2.0, 0.5}, {7.0, 3.0, -11.0}}) {
    const double ref = factor(p[0]) * factor(p[1]) * factor(p[2]);
    EXPECT_NEAR(f.fourier_abs2(p), ref * ref, 1e-9);
  }
}

TEST(Admissibility, GuardNamesMinimalSide) {
  const TestFunction f(TestFunctionKind::mollifier_bump, 3);
  EXPECT_EQ(minimal_admissible_side(f, 1.0, 0.125), 17);
  EXPECT_NO_THROW(check_admissible(LatticeShape(3, 17), f, 1.0, 0.125));
  EXPECT_THROW(check_admissible(LatticeShape(3, 16), f, 1.0, 0.125), GuardError);
  EXPECT_NO_THROW(check_admissible(LatticeShape(3, 16), f, 0.5, 0.125));
  EXPECT_THROW(check_admissible(LatticeShape(3, 64), f, 1.0, 0.0), ConfigError);
  try {
    check_admissible(LatticeShape(3, 8), f, 1.0, 0.125);
  } catch (const GuardError& e) {
    EXPECT_NE(std::string(e.what()).find("L >= 17"), std::string::npos);
  }
}

TEST(FieldWeights, VanishOutsideSupport) {
  const LatticeShape s(3, 20);
  const TestFunction f(TestFunctionKind::mollifier_bump, 3);
  const VertexField w = field_weights(s, f, 1.0, 0.125);
  double total = 0.0;
  for (std::size_t v = 0; v < w.size(); ++v) {
    const auto c = s.centered_coords(v);
    const double r = 0.125 * std::sqrt(double(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]));
    if (r >= 1.0) EXPECT_EQ(w[v], 0.0);
    total += w[v];
  }
  // Riemann sum of f: total = eps^{d/2+1} eps^{-d} (1 + O(eps^2)).
  EXPECT_NEAR(total / std::pow(0.125, -0.5), 1.0, 1e-2);
}

TEST(FieldSample, RescalingIdentityIsExact) {
  Gen gen(31);
  const LatticeShape s(3, 24);
  const VertexField phi = gen.vertex_field(s);
  for (const TestFunctionKind kind : {TestFunctionKind::mollifier_bump, TestFunctionKind::product_bump}) {
    const TestFunction f(kind, 3);
    for (double eps : {0.25, 0.125}) {
      for (double lambda : {1.0, 0.5, 0.25}) {
        const double lhs = phi_eps_value(phi, f, lambda, eps);
        const double rhs = std::pow(lambda, 1.0 - 1.5) * phi_eps_value(phi, f, 1.0, eps / lambda);
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
      }
    }
  }
}

TEST(Kernel, MatchesDifferencedPotential) {
  Gen gen(41);
  for (int d : {3, 5}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::MatrixXd A = random_spd(gen, d, 0.5);
      const Eigen::MatrixXd Q = random_spd(gen, d, 0.1);
      Eigen::VectorXd x(d);
      for (int i = 0; i < d; ++i) x(i) = gen.normal();
      const CovarianceModel m{A, Q};
      const double ref = kernel_by_differences(A, Q, x);
      EXPECT_NEAR(kernel_K(m, as_vec(x)), ref, 1e-6 * std::abs(ref)) << "d=" << d;
    }
  }
}

TEST(Kernel, HomogeneityProperty) {
  Gen gen(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = gen.integer(3, 5);
    const CovarianceModel m{random_spd(gen, d, 0.3), random_spd(gen, d, 0.0)};
    std::vector<double> x(static_cast<std::size_t>(d)), x2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = gen.uniform(-3.0, 3.0);
      x2[i] = 2.0 * x[i];
    }
    const double k = kernel_K(m, x);
    EXPECT_NEAR(kernel_K(m, x2), std::pow(2.0, 2.0 - d) * k, 1e-12 * std::abs(k));
  }
}

TEST(Kernel, ReducesToGreenFunction) {
  Gen gen(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd A = random_spd(gen, 3, 0.5);
    const double q = gen.uniform(0.1, 3.0);
    const std::vector<double> x{gen.normal(), gen.normal(), gen.normal()};
    EXPECT_NEAR(kernel_K({A, q * A}, x), q * homogenized_green(A, x), 1e-12 * q * homogenized_green(A, x));
  }
  const std::vector<double> x{0.3, -1.2, 0.4};
  const double r = std::sqrt(0.09 + 1.44 + 0.16);
  EXPECT_NEAR(homogenized_green(Eigen::MatrixXd::Identity(3, 3), x), 1.0 / (4.0 * std::numbers::pi * r), 1e-15);
  EXPECT_NEAR(homogenized_green(2.0 * Eigen::MatrixXd::Identity(3, 3), x), 1.0 / (8.0 * std::numbers::pi * r), 1e-15);
}

TEST(Sigma2, ShellTheoremOracle) {
  const TestFunction f(TestFunctionKind::mollifier_bump, 3);
  auto radial = [&](double r) {
    const double x[3] = {r, 0.0, 0.0};
    return f.value(x);
  };
  // Potential of a radial density: int f(y) / (4 pi |x - y|) dy.
  auto potential = [&](double r) {
    const double in = GK::integrate([&](double s) { return radial(s) * s * s; }, 0.0, r, 15, 1e-14);
    const double out = GK::integrate([&](double s) { return radial(s) * s; }, r, 1.0, 15, 1e-14);
    return in / r + out;
  };
  const double ref = GK::integrate(
      [&](double r) { return 4.0 * std::numbers::pi * r * r * radial(r) * potential(r); }, 0.0, 1.0, 15, 1e-13);
  const double q = 0.7;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  const Sigma2Result res = sigma2({I, q * I}, f, 1.0);
  EXPECT_NEAR(res.value, q * ref, 1e-10 * ref);
  EXPECT_LT(res.quad_err, 1e-10 * res.value);
}

TEST(Sigma2, ScalesWithLambda) {
  Gen gen(44);
  const CovarianceModel m{random_spd(gen, 3, 0.5), random_spd(gen, 3, 0.1)};
  for (const TestFunctionKind kind : {TestFunctionKind::mollifier_bump, TestFunctionKind::product_bump}) {
    const TestFunction f(kind, 3);
    const double base = sigma2(m, f, 1.0).value;
    for (double lambda : {0.5, 0.25}) {
      EXPECT_NEAR(sigma2(m, f, lambda).value, std::pow(lambda, 2.0 - 3.0) * base, 1e-8 * base) << to_string(kind);
    }
  }
}

TEST(Sigma2, ScalarCoefficients) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  for (const TestFunctionKind kind : {TestFunctionKind::mollifier_bump, TestFunctionKind::product_bump}) {
    const TestFunction f(kind, 3);
    const double base = sigma2({I, I}, f, 1.0).value;
    EXPECT_NEAR(sigma2({2.0 * I, 3.0 * I}, f, 1.0).value, 0.75 * base, 1e-10 * base);
    EXPECT_EQ(sigma2({I, Eigen::MatrixXd::Zero(3, 3)}, f, 1.0).value, 0.0);
  }
}

TEST(CovarianceModel, Validation) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_NO_THROW((CovarianceModel{I, I}.validate()));
  EXPECT_THROW((CovarianceModel{-I, I}.validate()), PreconditionError);
  EXPECT_THROW((CovarianceModel{I, -I}.validate()), PreconditionError);
  Eigen::MatrixXd asym = I;
  asym(0, 1) = 0.5;
  EXPECT_THROW((CovarianceModel{asym, I}.validate()), PreconditionError);
}
