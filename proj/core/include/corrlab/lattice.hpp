#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace corrlab {

/// Discrete torus (Z/LZ)^d with nearest-neighbour edges.
///
/// Vertices are stored row-major in (x_1, ..., x_d), x_1 slowest. Edge (x, i)
/// joins x to x + e_i (mod L) and is stored at vertex_index(x) * d + i, with
/// the axis i zero-based in code.
struct LatticeShape {
  int d = 3;
  int L = 2;

  LatticeShape() = default;
  LatticeShape(int dim, int side);

  std::size_t num_vertices() const noexcept { return num_vertices_; }
  std::size_t num_edges() const noexcept { return num_vertices_ * static_cast<std::size_t>(d); }

  /// Distance in flat index between x and x + e_axis (before wrapping).
  std::size_t stride(int axis) const noexcept { return strides_[static_cast<std::size_t>(axis)]; }

  std::size_t vertex_index(std::span<const int> coords) const;
  std::vector<int> vertex_coords(std::size_t v) const;
  /// Coordinates mapped into the centred fundamental domain [-floor(L/2), ceil(L/2)).
  std::vector<int> centered_coords(std::size_t v) const;
  int centered(int c) const noexcept { return c < (L + 1) / 2 ? c : c - L; }

  std::size_t forward_neighbor(std::size_t v, int axis) const noexcept;
  std::size_t backward_neighbor(std::size_t v, int axis) const noexcept;

  friend bool operator==(const LatticeShape& a, const LatticeShape& b) noexcept {
    return a.d == b.d && a.L == b.L;
  }

 private:
  std::size_t num_vertices_ = 0;
  std::vector<std::size_t> strides_;
};

/// An edge in base-point form: joins `base` to `base + e_dir`.
struct EdgeId {
  std::vector<int> base;
  int dir = 0;

  std::size_t index(const LatticeShape& shape) const;
  std::size_t tail(const LatticeShape& shape) const;  // base vertex
  std::size_t head(const LatticeShape& shape) const;  // base + e_dir
  static EdgeId from_index(const LatticeShape& shape, std::size_t e);

  friend bool operator==(const EdgeId&, const EdgeId&) = default;
};

struct VertexField {
  LatticeShape shape;
  std::vector<double> values;

  VertexField() = default;
  explicit VertexField(const LatticeShape& s, double fill = 0.0);
  VertexField(const LatticeShape& s, std::vector<double> v);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const noexcept { return values.size(); }

  double mean() const;
  double max_abs() const;
};

struct EdgeField {
  LatticeShape shape;
  std::vector<double> values;

  EdgeField() = default;
  explicit EdgeField(const LatticeShape& s, double fill = 0.0);
  EdgeField(const LatticeShape& s, std::vector<double> v);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at(std::size_t vertex, int axis) {
    return values[vertex * static_cast<std::size_t>(shape.d) + static_cast<std::size_t>(axis)];
  }
  double at(std::size_t vertex, int axis) const {
    return values[vertex * static_cast<std::size_t>(shape.d) + static_cast<std::size_t>(axis)];
  }
  std::size_t size() const noexcept { return values.size(); }
  double max_abs() const;
};

// Sequential left-to-right reductions; results are bit-stable.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double dot(const VertexField& a, const VertexField& b);
double dot(const EdgeField& a, const EdgeField& b);

/// grad f (x, i) = f(x + e_i) - f(x).
EdgeField gradient(const VertexField& f);

/// (div* F)(x) = sum_i F(x - e_i, i) - F(x, i); the formal adjoint of gradient.
VertexField divergence(const EdgeField& F);

/// Edge field equal to xi_i on every axis-i edge.
EdgeField lift_vector(const LatticeShape& shape, std::span<const double> xi);

/// mu * u + div*(a grad u) for conductances `a`.
VertexField apply_operator(const EdgeField& a, double mu, const VertexField& u);

/// In-place variant writing into `out` (sized like u); used by the iterative solver.
void apply_operator_into(const EdgeField& a, double mu, std::span<const double> u,
                         std::span<double> out);

/// Subtract the mean so that sum(values) == 0 up to roundoff.
void project_mean_zero(std::span<double> values);

/// Translate a vertex field by a lattice vector: out(x + t) = f(x).
VertexField translate(const VertexField& f, std::span<const int> t);
/// Translate an edge field by a lattice vector: out(x + t, i) = F(x, i).
EdgeField translate(const EdgeField& F, std::span<const int> t);

}  // namespace corrlab
