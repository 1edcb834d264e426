#include <gtest/gtest.h>

#include <cmath>

#include "corrlab/bound_lab.hpp"
#include "corrlab/errors.hpp"

using namespace corrlab;

TEST(Xesum, UnitEpsIsHandCountable) {
  const int origin[3] = {0, 0, 0};
  const LemmaCheck c = xesum_check(3, origin, 1.0);
  EXPECT_EQ(c.points, 7u);
  EXPECT_DOUBLE_EQ(c.lhs, 1.0 + 6.0 / 4.0);
  EXPECT_DOUBLE_EQ(c.rhs, 1.0);
  const int e[3] = {1, 0, 0};
  const LemmaCheck d = xesum_check(3, e, 1.0);
  const double lhs = 1.0 + 1.0 / 4.0 + 4.0 / std::pow(1.0 + std::sqrt(2.0), 2) + 1.0 / 9.0;
  EXPECT_NEAR(d.lhs, lhs, 1e-14);
  EXPECT_DOUBLE_EQ(d.rhs, 0.25);
}

TEST(Xesum, MatchesCubeLoop) {
  const int e[3] = {3, -2, 1};
  const double eps = 0.2;
  double lhs = 0.0;
  std::size_t n = 0;
  for (int x = -5; x <= 5; ++x)
    for (int y = -5; y <= 5; ++y)
      for (int z = -5; z <= 5; ++z) {
        if (x * x + y * y + z * z > 25) continue;
        const double r = std::sqrt(std::pow(x - 3, 2) + std::pow(y + 2, 2) + std::pow(z - 1, 2));
        lhs += 1.0 / ((1.0 + r) * (1.0 + r));
        ++n;
      }
  const LemmaCheck c = xesum_check(3, e, eps);
  EXPECT_EQ(c.points, n);
  EXPECT_NEAR(c.lhs, lhs, 1e-12 * lhs);
  EXPECT_NEAR(c.rhs, 5.0 / std::pow(1.0 + eps * std::sqrt(14.0), 2), 1e-14);
}

TEST(Xesum, FourDimensionalBall) {
  const int e[4] = {0, 0, 0, 0};
  const LemmaCheck c = xesum_check(4, e, 0.5);
  // |x|^2 <= 4 in Z^4: 1 + 8 + 24 + 32 + 24 points at |x|^2 = 0..4.
  EXPECT_EQ(c.points, 89u);
}

TEST(Eepsum, TailIsSmallAndPositive) {
  const int e[3] = {2, 0, 0};
  const LemmaCheck a = eepsum_check(3, 4.0, e, 0.25, 16.0);
  const LemmaCheck b = eepsum_check(3, 4.0, e, 0.25, 24.0);
  EXPECT_GT(a.tail, 0.0);
  EXPECT_GT(a.tail, b.tail);
  // Both are upper estimates of the same series; the larger radius is tighter.
  EXPECT_GE(a.lhs, b.lhs * (1.0 - 1e-12));
  EXPECT_LT(a.lhs - b.lhs, a.tail);
  EXPECT_DOUBLE_EQ(a.rhs, eepsum_rhs(3, 4.0, e, 0.25));
}

TEST(Eepsum, RhsMergesAtPEqualD) {
  const int e[3] = {4, 4, 0};
  const double l = std::log(8.0);
  const double base = 1.0 + std::sqrt(32.0) / 8.0;
  EXPECT_NEAR(eepsum_rhs(3, 3.0, e, 0.125), 2.0 * l / std::pow(base, 3), 1e-14);
}

TEST(BoundLab, Guards) {
  const int e[3] = {0, 0, 0};
  EXPECT_THROW(xesum_check(3, e, 1.0 / 200), GuardError);
  EXPECT_THROW(xesum_check(3, e, 0.0), PreconditionError);
  EXPECT_THROW(xesum_check(2, std::span<const int>(e, 2), 0.5), PreconditionError);
  EXPECT_THROW(eepsum_check(3, 4.0, e, 0.25, 15.0), GuardError);
  EXPECT_THROW(eepsum_check(3, 4.0, e, 0.75, 16.0), PreconditionError);
  EXPECT_THROW(eepsum_check(3, 0.0, e, 0.25, 16.0), PreconditionError);
  EXPECT_THROW(eepsum_check(3, 4.0, e, 1.0 / 64, 256.0), GuardError);
  EXPECT_THROW(parse_lemma("other"), ConfigError);
  EXPECT_EQ(parse_lemma("eepsum"), Lemma::eepsum);
}

TEST(BoundLab, FrozenScanRegression) {
  ScanGrid g;
  g.eps = {1.0 / 8, 1.0 / 16};
  g.scaled_norms = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
  g.directions = {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}};
  const BoundScan x = constant_scan(Lemma::xesum, g, 2);
  EXPECT_EQ(x.rows.size(), 36u);
  EXPECT_NEAR(x.max_ratio, 19.0078498629562, 1e-10);
  EXPECT_EQ(x.argmax, 25u);
  EXPECT_TRUE(x.max_on_eps_boundary);
  EXPECT_NEAR(x.far_max, 9.14604724509448, 1e-10);

  ScanGrid h;
  h.eps = {1.0 / 8};
  h.p_list = {4.0, 3.0};
  h.scaled_norms = {0.0, 1.0, 2.0};
  h.directions = {{1, 0, 0}, {1, 1, 1}};
  const BoundScan y = constant_scan(Lemma::eepsum, h, 1);
  EXPECT_NEAR(y.max_ratio, 7.15183856221312, 1e-9);
  EXPECT_EQ(y.argmax, 10u);
}

TEST(BoundLab, ScanRatiosStayBoundedAcrossEps) {
  ScanGrid g;
  g.eps = {0.5, 0.25, 0.125};
  g.scaled_norms = {0.0, 1.0, 4.0};
  g.directions = {{1, 0, 0}, {1, 1, 1}};
  const BoundScan s = constant_scan(Lemma::xesum, g);
  for (const auto& row : s.rows) {
    EXPECT_GT(row.check.ratio, 0.0);
    EXPECT_LT(row.check.ratio, 50.0);
  }
}
