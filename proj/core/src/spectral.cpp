#include "corrlab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "corrlab/errors.hpp"

namespace corrlab {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct TorusFFT::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
};

TorusFFT::TorusFFT(const LatticeShape& shape) : shape_(shape), impl_(std::make_unique<Impl>()) {
  const auto L = static_cast<std::size_t>(shape.L);
  spectrum_size_ = shape.num_vertices() / L * (L / 2 + 1);
  std::vector<int> dims(static_cast<std::size_t>(shape.d), shape.L);

  std::lock_guard lock(planner_mutex());
  impl_->real = fftw_alloc_real(shape.num_vertices());
  impl_->spec = fftw_alloc_complex(spectrum_size_);
  if (!impl_->real || !impl_->spec) throw Error("FFTW allocation failed");
  impl_->forward = fftw_plan_dft_r2c(shape.d, dims.data(), impl_->real, impl_->spec, FFTW_ESTIMATE);
  impl_->backward = fftw_plan_dft_c2r(shape.d, dims.data(), impl_->spec, impl_->real, FFTW_ESTIMATE);
  if (!impl_->forward || !impl_->backward) throw Error("FFTW planning failed");
}

TorusFFT::~TorusFFT() = default;

void TorusFFT::wave_vector(std::size_t s, std::span<double> theta) const {
  const auto L = static_cast<std::size_t>(shape_.L);
  const std::size_t half = L / 2 + 1;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(shape_.L);
  const auto d = static_cast<std::size_t>(shape_.d);
  theta[d - 1] = step * static_cast<double>(s % half);
  s /= half;
  for (std::size_t i = d - 1; i-- > 0;) {
    theta[i] = step * static_cast<double>(s % L);
    s /= L;
  }
}

double TorusFFT::slot_multiplicity(std::size_t s) const noexcept {
  const auto L = static_cast<std::size_t>(shape_.L);
  const std::size_t half = L / 2 + 1;
  const std::size_t k_last = s % half;
  // Slots with k_last in (0, L/2) stand for themselves and their mirror image.
  if (k_last == 0 || (L % 2 == 0 && k_last == L / 2)) return 1.0;
  return 2.0;
}

void TorusFFT::filter(std::span<const double> in, std::span<const double> symbol, std::span<double> out) {
  const std::size_t n = shape_.num_vertices();
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n), impl_->real);
  fftw_execute(impl_->forward);
  for (std::size_t s = 0; s < spectrum_size_; ++s) {
    impl_->spec[s][0] *= symbol[s];
    impl_->spec[s][1] *= symbol[s];
  }
  fftw_execute(impl_->backward);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = impl_->real[i] * scale;
}

void TorusFFT::synthesize(std::span<const double> symbol, std::span<double> out) {
  const std::size_t n = shape_.num_vertices();
  for (std::size_t s = 0; s < spectrum_size_; ++s) {
    impl_->spec[s][0] = symbol[s];
    impl_->spec[s][1] = 0.0;
  }
  fftw_execute(impl_->backward);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = impl_->real[i] * scale;
}

void TorusFFT::power_spectrum(std::span<const double> in, std::span<double> power) {
  const std::size_t n = shape_.num_vertices();
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n), impl_->real);
  fftw_execute(impl_->forward);
  for (std::size_t s = 0; s < spectrum_size_; ++s) {
    power[s] = impl_->spec[s][0] * impl_->spec[s][0] + impl_->spec[s][1] * impl_->spec[s][1];
  }
}

std::vector<double> tabulate_symbol(const TorusFFT& fft,
                                    const std::function<double(std::span<const double>)>& fn) {
  std::vector<double> table(fft.spectrum_size());
  std::vector<double> theta(static_cast<std::size_t>(fft.shape().d));
  for (std::size_t s = 0; s < table.size(); ++s) {
    fft.wave_vector(s, theta);
    table[s] = fn(theta);
  }
  return table;
}

double laplacian_symbol(std::span<const double> theta) {
  double s = 0.0;
  for (double t : theta) s += 2.0 - 2.0 * std::cos(t);
  return s;
}

SpectralPreconditioner::SpectralPreconditioner(const LatticeShape& shape, double mu, double abar)
    : fft_(shape) {
  if (!(abar > 0.0)) throw PreconditionError("preconditioner coefficient must be positive");
  inverse_symbol_ = tabulate_symbol(fft_, [&](std::span<const double> theta) {
    const double lam = mu + abar * laplacian_symbol(theta);
    return lam > 0.0 ? 1.0 / lam : 0.0;
  });
  // Zero mode: exactly zero for mu == 0 (the pseudo-inverse on mean-zero data).
  if (mu == 0.0) inverse_symbol_[0] = 0.0;
}

void SpectralPreconditioner::apply(std::span<const double> in, std::span<double> out) {
  fft_.filter(in, inverse_symbol_, out);
}

VertexField autocorrelation(const VertexField& f) {
  const LatticeShape& shape = f.shape;
  TorusFFT fft(shape);
  std::vector<double> power(fft.spectrum_size());
  fft.power_spectrum(f.values, power);
  VertexField c(shape);
  fft.synthesize(power, c.values);
  const double scale = 1.0 / static_cast<double>(shape.num_vertices());
  for (double& x : c.values) x *= scale;

  // Mirror so that C(x) and C(-x) are bitwise equal.
  std::vector<int> coords(static_cast<std::size_t>(shape.d));
  for (std::size_t v = 0; v < c.size(); ++v) {
    coords = shape.vertex_coords(v);
    for (auto& x : coords) x = -x;
    const std::size_t w = shape.vertex_index(coords);
    if (w < v) c.values[v] = c.values[w];
  }
  return c;
}

double spectral_quadratic_form(const VertexField& w,
                               const std::function<double(std::span<const double>)>& symbol) {
  TorusFFT fft(w.shape);
  std::vector<double> power(fft.spectrum_size());
  fft.power_spectrum(w.values, power);
  std::vector<double> theta(static_cast<std::size_t>(w.shape.d));
  double total = 0.0;
  for (std::size_t s = 0; s < power.size(); ++s) {
    fft.wave_vector(s, theta);
    total += fft.slot_multiplicity(s) * symbol(theta) * power[s];
  }
  return total / static_cast<double>(w.shape.num_vertices());
}

}  // namespace corrlab
