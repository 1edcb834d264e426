#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "corrlab/errors.hpp"
#include "corrlab/field_io.hpp"
#include "corrlab/lattice.hpp"
#include "gen.hpp"

using namespace corrlab;
using corrlab::testing::Gen;

namespace {

double rel_gap(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// Brute force by coordinates, independent of the stride arithmetic.
EdgeField gradient_by_coords(const VertexField& f) {
  const LatticeShape& s = f.shape;
  EdgeField g(s);
  for (std::size_t v = 0; v < s.num_vertices(); ++v) {
    auto x = s.vertex_coords(v);
    for (int i = 0; i < s.d; ++i) {
      auto y = x;
      y[static_cast<std::size_t>(i)] = (y[static_cast<std::size_t>(i)] + 1) % s.L;
      g.at(v, i) = f[s.vertex_index(y)] - f[v];
    }
  }
  return g;
}

Eigen::MatrixXd dense_operator(const EdgeField& a, double mu) {
  const LatticeShape& s = a.shape;
  const auto n = static_cast<Eigen::Index>(s.num_vertices());
  Eigen::MatrixXd m = mu * Eigen::MatrixXd::Identity(n, n);
  for (std::size_t e = 0; e < s.num_edges(); ++e) {
    const EdgeId id = EdgeId::from_index(s, e);
    const auto t = static_cast<Eigen::Index>(id.tail(s));
    const auto h = static_cast<Eigen::Index>(id.head(s));
    m(t, t) += a[e];
    m(h, h) += a[e];
    m(t, h) -= a[e];
    m(h, t) -= a[e];
  }
  return m;
}

}  // namespace

TEST(LatticeShape, Counts) {
  const LatticeShape s(3, 4);
  EXPECT_EQ(s.num_vertices(), 64u);
  EXPECT_EQ(s.num_edges(), 192u);
  EXPECT_THROW(LatticeShape(0, 4), ConfigError);
  EXPECT_THROW(LatticeShape(3, 1), ConfigError);
}

TEST(LatticeShape, CoordinateRoundTrip) {
  const LatticeShape s(3, 5);
  for (std::size_t v = 0; v < s.num_vertices(); ++v) EXPECT_EQ(s.vertex_index(s.vertex_coords(v)), v);
  EXPECT_EQ(s.vertex_index(std::vector<int>{1, 0, 0}), 25u);
  EXPECT_EQ(s.centered(4), -1);
  EXPECT_EQ(s.centered(2), 2);
}

TEST(EdgeId, HeadWrapsAround) {
  const LatticeShape s(3, 4);
  const EdgeId e{{3, 1, 2}, 0};
  EXPECT_EQ(e.tail(s), s.vertex_index(std::vector<int>{3, 1, 2}));
  EXPECT_EQ(e.head(s), s.vertex_index(std::vector<int>{0, 1, 2}));
  EXPECT_EQ(EdgeId::from_index(s, e.index(s)), e);
}

TEST(Gradient, ConstantIsZero) {
  const LatticeShape s(3, 4);
  EXPECT_EQ(gradient(VertexField(s, 2.5)).max_abs(), 0.0);
}

TEST(Gradient, DeltaAtOrigin) {
  const LatticeShape s(3, 4);
  VertexField f(s);
  f[0] = 1.0;
  const EdgeField g = gradient(f);
  EXPECT_EQ(g.at(0, 0), -1.0);
  EXPECT_EQ(g.at(s.vertex_index(std::vector<int>{3, 0, 0}), 0), 1.0);
  int nonzero = 0;
  for (double v : g.values) nonzero += v != 0.0;
  EXPECT_EQ(nonzero, 6);
}

TEST(Gradient, MatchesCoordinateLoop) {
  Gen gen(1);
  const LatticeShape s(3, 3);
  const VertexField f = gen.vertex_field(s);
  const EdgeField a = gradient(f);
  const EdgeField b = gradient_by_coords(f);
  for (std::size_t e = 0; e < a.size(); ++e) EXPECT_EQ(a[e], b[e]);
}

TEST(Divergence, ConstantTelescopes) {
  const LatticeShape s(3, 4);
  EXPECT_EQ(divergence(EdgeField(s, 1.7)).max_abs(), 0.0);
  const std::vector<double> xi{0.3, -1.0, 2.0};
  EXPECT_LT(divergence(lift_vector(s, xi)).max_abs(), 1e-15);
}

TEST(Divergence, LaplacianOfDelta) {
  const LatticeShape s(3, 4);
  VertexField f(s);
  f[0] = 1.0;
  const VertexField lap = divergence(gradient(f));
  EXPECT_EQ(lap[0], 6.0);
  for (int i = 0; i < 3; ++i) {
    std::vector<int> x{0, 0, 0};
    x[static_cast<std::size_t>(i)] = 1;
    EXPECT_EQ(lap[s.vertex_index(x)], -1.0);
    x[static_cast<std::size_t>(i)] = 3;
    EXPECT_EQ(lap[s.vertex_index(x)], -1.0);
  }
  double total = 0.0;
  for (double v : lap.values) total += std::abs(v);
  EXPECT_EQ(total, 12.0);
}

TEST(LiftVector, PerAxisConstant) {
  const LatticeShape s(3, 3);
  const EdgeField f = lift_vector(s, std::vector<double>{1.0, 0.0, 0.0});
  for (std::size_t v = 0; v < s.num_vertices(); ++v) {
    EXPECT_EQ(f.at(v, 0), 1.0);
    EXPECT_EQ(f.at(v, 1), 0.0);
    EXPECT_EQ(f.at(v, 2), 0.0);
  }
  EXPECT_EQ(lift_vector(s, std::vector<double>{0.0, 0.0, 0.0}).max_abs(), 0.0);
}

TEST(DiscreteCalculusProperty, AdjointnessAndStencil) {
  Gen gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const LatticeShape s(gen.integer(1, 4), gen.integer(2, 5));
    const VertexField g = gen.vertex_field(s);
    const EdgeField F = gen.edge_field(s);
    EXPECT_LT(rel_gap(dot(divergence(F), g), dot(F, gradient(g))), 1e-12);

    const VertexField div = divergence(F);
    double sum = 0.0, scale = 0.0;
    for (double v : div.values) {
      sum += v;
      scale += std::abs(v);
    }
    EXPECT_LE(std::abs(sum), 1e-13 * std::max(scale, 1.0));

    const VertexField lap = divergence(gradient(g));
    for (std::size_t v = 0; v < s.num_vertices(); ++v) {
      double adj = 0.0;
      for (int i = 0; i < s.d; ++i) adj += g[s.forward_neighbor(v, i)] + g[s.backward_neighbor(v, i)];
      EXPECT_NEAR(lap[v], 2.0 * s.d * g[v] - adj, 1e-12 * (1.0 + std::abs(lap[v])));
    }
  }
}

TEST(ApplyOperator, SymmetricAndPositive) {
  Gen gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const LatticeShape s(3, gen.integer(2, 5));
    const EdgeField a = gen.conductances(s, 1.0, 4.0);
    const double mu = gen.uniform(0.0, 2.0);
    const VertexField u = gen.vertex_field(s);
    const VertexField v = gen.vertex_field(s);
    EXPECT_LT(rel_gap(dot(apply_operator(a, mu, u), v), dot(u, apply_operator(a, mu, v))), 1e-12);
    EXPECT_GE(dot(u, apply_operator(a, mu, u)), mu * dot(u, u) * (1.0 - 1e-12));
  }
}

TEST(ApplyOperator, MatchesDenseAssembly) {
  Gen gen(3);
  const LatticeShape s(3, 3);
  const EdgeField a = gen.conductances(s, 1.0, 4.0);
  const VertexField u = gen.vertex_field(s);
  const Eigen::MatrixXd m = dense_operator(a, 0.7);
  const Eigen::VectorXd ref = m * Eigen::Map<const Eigen::VectorXd>(u.values.data(), 27);
  const VertexField out = apply_operator(a, 0.7, u);
  for (std::size_t i = 0; i < 27; ++i) EXPECT_NEAR(out[i], ref(static_cast<Eigen::Index>(i)), 1e-12);
}

TEST(ApplyOperator, UnitConductanceIsLaplacian) {
  const LatticeShape s(3, 4);
  VertexField f(s);
  f[5] = 1.0;
  const VertexField a = apply_operator(EdgeField(s, 1.0), 0.0, f);
  const VertexField b = divergence(gradient(f));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Translate, ShiftsValues) {
  Gen gen(5);
  const LatticeShape s(3, 4);
  const VertexField f = gen.vertex_field(s);
  const std::vector<int> t{1, -1, 2};
  const VertexField g = translate(f, t);
  for (std::size_t v = 0; v < s.num_vertices(); ++v) {
    auto x = s.vertex_coords(v);
    for (int i = 0; i < 3; ++i) x[static_cast<std::size_t>(i)] += t[static_cast<std::size_t>(i)];
    EXPECT_EQ(g[s.vertex_index(std::vector<int>{(x[0] + 4) % 4, (x[1] + 4) % 4, (x[2] + 4) % 4})], f[v]);
  }
}

TEST(FieldIo, RoundTripAndHeader) {
  Gen gen(9);
  const LatticeShape s(3, 3);
  const EdgeField f = gen.edge_field(s);
  std::stringstream buf;
  write_field(buf, f);
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.size(), kFieldHeaderBytes + 8 * f.size());
  EXPECT_EQ(bytes.substr(0, 8), "CORRLAB1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 1);
  const AnyField back = read_field(buf);
  ASSERT_TRUE(std::holds_alternative<EdgeField>(back));
  EXPECT_EQ(std::get<EdgeField>(back).values, f.values);
}

TEST(FieldIo, RejectsBadMagic) {
  std::stringstream buf(std::string(64, 'x'));
  EXPECT_THROW(read_field(buf), Error);
}
