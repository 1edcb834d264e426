#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "corrlab/lattice.hpp"

namespace corrlab {

/// Real <-> half-complex d-dimensional DFT on the torus (FFTW backed).
///
/// Plans are built with FFTW_ESTIMATE so that results are reproducible
/// bit-for-bit; plan creation is serialized internally, execution is not, so
/// each thread should own its instance.
class TorusFFT {
 public:
  explicit TorusFFT(const LatticeShape& shape);
  ~TorusFFT();
  TorusFFT(const TorusFFT&) = delete;
  TorusFFT& operator=(const TorusFFT&) = delete;

  const LatticeShape& shape() const noexcept { return shape_; }
  /// Number of stored complex coefficients: L^(d-1) * (L/2 + 1).
  std::size_t spectrum_size() const noexcept { return spectrum_size_; }

  /// Wave numbers (2 pi k_i / L) of spectrum slot `s`, in [0, 2 pi).
  void wave_vector(std::size_t s, std::span<double> theta) const;

  /// Multiply the spectrum of `in` by the real symbol and transform back:
  /// out = (1/N) sum_k symbol(k) in^(k) e^{ikx}. `in` and `out` may alias.
  void filter(std::span<const double> in, std::span<const double> symbol, std::span<double> out);

  /// out(x) = (1/N) sum_k symbol(k) e^{ikx} for a real even symbol.
  void synthesize(std::span<const double> symbol, std::span<double> out);

  /// |f^(k)|^2 on the half spectrum, with f^(k) = sum_x f(x) e^{-ikx}.
  void power_spectrum(std::span<const double> in, std::span<double> power);

  /// Real-symmetric weight of each half-spectrum slot in a full sum over k.
  double slot_multiplicity(std::size_t s) const noexcept;

 private:
  struct Impl;
  LatticeShape shape_;
  std::size_t spectrum_size_;
  std::unique_ptr<Impl> impl_;
};

/// Symbol table of `fn(theta)` over the half spectrum of `shape`.
std::vector<double> tabulate_symbol(const TorusFFT& fft,
                                    const std::function<double(std::span<const double>)>& fn);

/// Eigenvalue of the unit-conductance operator div* grad at wave vector theta:
/// sum_i (2 - 2 cos theta_i).
double laplacian_symbol(std::span<const double> theta);

/// Exact inverse of mu + abar * div* grad on the torus (zero mode dropped
/// when mu == 0).
class SpectralPreconditioner {
 public:
  SpectralPreconditioner(const LatticeShape& shape, double mu, double abar);
  void apply(std::span<const double> in, std::span<double> out);

 private:
  TorusFFT fft_;
  std::vector<double> inverse_symbol_;
};

/// C(x) = L^{-d} sum_y f(y) f(y + x), with C(x) and C(-x) assigned the same
/// value bit-for-bit.
VertexField autocorrelation(const VertexField& f);

/// Sum over the full torus of a real even symbol weighted by |w^(k)|^2 / N:
/// (1/N) sum_k symbol(k) |w^(k)|^2 = sum_{x,y} w(x) w(y) K(x - y).
double spectral_quadratic_form(const VertexField& w,
                               const std::function<double(std::span<const double>)>& symbol);

}  // namespace corrlab
