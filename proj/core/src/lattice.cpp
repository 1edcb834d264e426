#include "corrlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "corrlab/errors.hpp"

namespace corrlab {

LatticeShape::LatticeShape(int dim, int side) : d(dim), L(side) {
  if (d < 1) throw ConfigError("lattice dimension must be >= 1, got " + std::to_string(d));
  if (L < 2) throw ConfigError("lattice side must be >= 2, got " + std::to_string(L));
  strides_.assign(static_cast<std::size_t>(d), 1);
  for (int i = d - 2; i >= 0; --i) {
    strides_[static_cast<std::size_t>(i)] =
        strides_[static_cast<std::size_t>(i) + 1] * static_cast<std::size_t>(L);
  }
  num_vertices_ = strides_[0] * static_cast<std::size_t>(L);
}

std::size_t LatticeShape::vertex_index(std::span<const int> coords) const {
  if (coords.size() != static_cast<std::size_t>(d)) {
    throw PreconditionError("coordinate arity does not match lattice dimension");
  }
  std::size_t v = 0;
  for (int i = 0; i < d; ++i) {
    int c = coords[static_cast<std::size_t>(i)] % L;
    if (c < 0) c += L;
    v += static_cast<std::size_t>(c) * stride(i);
  }
  return v;
}

std::vector<int> LatticeShape::vertex_coords(std::size_t v) const {
  std::vector<int> c(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    c[static_cast<std::size_t>(i)] = static_cast<int>((v / stride(i)) % static_cast<std::size_t>(L));
  }
  return c;
}

std::vector<int> LatticeShape::centered_coords(std::size_t v) const {
  auto c = vertex_coords(v);
  for (auto& x : c) x = centered(x);
  return c;
}

std::size_t LatticeShape::forward_neighbor(std::size_t v, int axis) const noexcept {
  const std::size_t s = stride(axis);
  const std::size_t c = (v / s) % static_cast<std::size_t>(L);
  return c + 1 == static_cast<std::size_t>(L) ? v - c * s : v + s;
}

std::size_t LatticeShape::backward_neighbor(std::size_t v, int axis) const noexcept {
  const std::size_t s = stride(axis);
  const std::size_t c = (v / s) % static_cast<std::size_t>(L);
  return c == 0 ? v + (static_cast<std::size_t>(L) - 1) * s : v - s;
}

std::size_t EdgeId::index(const LatticeShape& shape) const {
  if (dir < 0 || dir >= shape.d) throw PreconditionError("edge direction out of range");
  return shape.vertex_index(base) * static_cast<std::size_t>(shape.d) + static_cast<std::size_t>(dir);
}

std::size_t EdgeId::tail(const LatticeShape& shape) const { return shape.vertex_index(base); }

std::size_t EdgeId::head(const LatticeShape& shape) const {
  return shape.forward_neighbor(shape.vertex_index(base), dir);
}

EdgeId EdgeId::from_index(const LatticeShape& shape, std::size_t e) {
  const auto d = static_cast<std::size_t>(shape.d);
  return EdgeId{shape.vertex_coords(e / d), static_cast<int>(e % d)};
}

VertexField::VertexField(const LatticeShape& s, double fill)
    : shape(s), values(s.num_vertices(), fill) {}

VertexField::VertexField(const LatticeShape& s, std::vector<double> v)
    : shape(s), values(std::move(v)) {
  if (values.size() != shape.num_vertices()) throw PreconditionError("vertex field size mismatch");
}

double VertexField::mean() const {
  double s = 0.0;
  for (double x : values) s += x;
  return s / static_cast<double>(values.size());
}

double VertexField::max_abs() const {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return m;
}

EdgeField::EdgeField(const LatticeShape& s, double fill) : shape(s), values(s.num_edges(), fill) {}

EdgeField::EdgeField(const LatticeShape& s, std::vector<double> v)
    : shape(s), values(std::move(v)) {
  if (values.size() != shape.num_edges()) throw PreconditionError("edge field size mismatch");
}

double EdgeField::max_abs() const {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double dot(const VertexField& a, const VertexField& b) { return dot(a.values, b.values); }
double dot(const EdgeField& a, const EdgeField& b) { return dot(a.values, b.values); }

namespace {

// Visits every edge (v, axis) as the pair (v, w = v + e_axis) without divisions.
template <typename Fn>
void for_each_edge(const LatticeShape& shape, Fn&& fn) {
  const std::size_t n = shape.num_vertices();
  const auto L = static_cast<std::size_t>(shape.L);
  for (int axis = 0; axis < shape.d; ++axis) {
    const std::size_t s = shape.stride(axis);
    const std::size_t block = s * L;
    for (std::size_t o = 0; o < n; o += block) {
      for (std::size_t c = 0; c < L; ++c) {
        const std::size_t base = o + c * s;
        const std::size_t nbase = o + ((c + 1) % L) * s;
        for (std::size_t k = 0; k < s; ++k) fn(base + k, nbase + k, axis);
      }
    }
  }
}

}  // namespace

EdgeField gradient(const VertexField& f) {
  EdgeField g(f.shape);
  const auto d = static_cast<std::size_t>(f.shape.d);
  for_each_edge(f.shape, [&](std::size_t v, std::size_t w, int axis) {
    g.values[v * d + static_cast<std::size_t>(axis)] = f.values[w] - f.values[v];
  });
  return g;
}

VertexField divergence(const EdgeField& F) {
  VertexField out(F.shape);
  const auto d = static_cast<std::size_t>(F.shape.d);
  for_each_edge(F.shape, [&](std::size_t v, std::size_t w, int axis) {
    const double flux = F.values[v * d + static_cast<std::size_t>(axis)];
    out.values[v] -= flux;
    out.values[w] += flux;
  });
  return out;
}

EdgeField lift_vector(const LatticeShape& shape, std::span<const double> xi) {
  if (xi.size() != static_cast<std::size_t>(shape.d)) {
    throw PreconditionError("vector arity does not match lattice dimension");
  }
  EdgeField F(shape);
  const auto d = static_cast<std::size_t>(shape.d);
  for (std::size_t v = 0; v < shape.num_vertices(); ++v) {
    for (std::size_t i = 0; i < d; ++i) F.values[v * d + i] = xi[i];
  }
  return F;
}

void apply_operator_into(const EdgeField& a, double mu, std::span<const double> u,
                         std::span<double> out) {
  const auto d = static_cast<std::size_t>(a.shape.d);
  for (std::size_t v = 0; v < u.size(); ++v) out[v] = mu * u[v];
  for_each_edge(a.shape, [&](std::size_t v, std::size_t w, int axis) {
    const double flux = a.values[v * d + static_cast<std::size_t>(axis)] * (u[w] - u[v]);
    out[v] -= flux;
    out[w] += flux;
  });
}

VertexField apply_operator(const EdgeField& a, double mu, const VertexField& u) {
  if (!(a.shape == u.shape)) throw PreconditionError("operator and field live on different lattices");
  VertexField out(u.shape);
  apply_operator_into(a, mu, u.values, out.values);
  return out;
}

void project_mean_zero(std::span<double> values) {
  double s = 0.0;
  for (double x : values) s += x;
  const double m = s / static_cast<double>(values.size());
  for (double& x : values) x -= m;
}

VertexField translate(const VertexField& f, std::span<const int> t) {
  VertexField out(f.shape);
  std::vector<int> c(static_cast<std::size_t>(f.shape.d));
  for (std::size_t v = 0; v < f.size(); ++v) {
    c = f.shape.vertex_coords(v);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += t[i];
    out.values[f.shape.vertex_index(c)] = f.values[v];
  }
  return out;
}

EdgeField translate(const EdgeField& F, std::span<const int> t) {
  EdgeField out(F.shape);
  const auto d = static_cast<std::size_t>(F.shape.d);
  std::vector<int> c(d);
  for (std::size_t v = 0; v < F.shape.num_vertices(); ++v) {
    c = F.shape.vertex_coords(v);
    for (std::size_t i = 0; i < d; ++i) c[i] += t[i];
    const std::size_t w = F.shape.vertex_index(c);
    for (std::size_t i = 0; i < d; ++i) out.values[w * d + i] = F.values[v * d + i];
  }
  return out;
}

}  // namespace corrlab
