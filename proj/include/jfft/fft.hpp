/**
 * @file fft.hpp
 * @brief Real-to-complex 2D FFT on the periodic grid (FFTW backend).
 *
 * Normalization: the forward transform is unnormalized, the inverse divides
 * by the number of nodes, so inverse(forward(v)) == v.
 *
 * Spectral layout: for a grid with n nodes per direction the transform of a
 * scalar plane holds n * (n/2 + 1) coefficients, index k1 + (n/2 + 1) * k2
 * with k1 in [0, n/2] (the halved, x1 direction) and k2 in [0, n).
 */
#pragma once

#include "jfft/grid.hpp"

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace jfft {

using Complex = std::complex<double>;

namespace detail {

// FFTW's planner is not re-entrant; execution with the new-array interface is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

using PlanHandle = std::shared_ptr<fftw_plan_s>;

}  // namespace detail

/// Plans for one grid size. Copies share the underlying plans.
class Fft2d {
 public:
  explicit Fft2d(const Grid& grid) : grid_(grid) {
    const int n = static_cast<int>(grid.n);
    std::vector<double> real(grid.nodes());
    std::vector<Complex> spec(grid.spectral_size());
    auto* r = real.data();
    auto* c = reinterpret_cast<fftw_complex*>(spec.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(detail::fftw_planner_mutex());
    // FFTW is row-major: the slow index is x2, the fast (halved) one is x1.
    forward_.reset(fftw_plan_dft_r2c_2d(n, n, r, c, flags), detail::PlanDeleter{});
    inverse_.reset(fftw_plan_dft_c2r_2d(n, n, c, r, flags | FFTW_DESTROY_INPUT),
                   detail::PlanDeleter{});
  }

  [[nodiscard]] const Grid& grid() const { return grid_; }

  /// Transform of one real plane of n^2 values.
  void forward(std::span<const double> in, std::span<Complex> out) const {
    check(in.size(), out.size());
    // FFTW does not modify the input of an out-of-place r2c transform.
    fftw_execute_dft_r2c(forward_.get(), const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
  }

  /// Inverse transform; `in` is used as scratch and overwritten.
  void inverse(std::span<Complex> in, std::span<double> out) const {
    check(out.size(), in.size());
    fftw_execute_dft_c2r(inverse_.get(), reinterpret_cast<fftw_complex*>(in.data()), out.data());
    const double scale = 1.0 / static_cast<double>(grid_.nodes());
    for (double& v : out) v *= scale;
  }

 private:
  void check(std::size_t real_size, std::size_t spec_size) const {
    if (real_size != grid_.nodes() || spec_size != grid_.spectral_size()) {
      throw std::invalid_argument("fft: size mismatch with grid");
    }
  }

  Grid grid_;
  detail::PlanHandle forward_;
  detail::PlanHandle inverse_;
};

/// Spectral planes of a vector field, one plane of spectral_size() per component.
struct SpectralField {
  Grid grid;
  std::vector<Complex> values;

  std::span<Complex> component(std::size_t alpha) {
    return {values.data() + alpha * grid.spectral_size(), grid.spectral_size()};
  }
  [[nodiscard]] std::span<const Complex> component(std::size_t alpha) const {
    return {values.data() + alpha * grid.spectral_size(), grid.spectral_size()};
  }
};

inline SpectralField fft_forward(const Fft2d& fft, const VectorField& field) {
  require_same_grid(fft.grid(), field.grid, "fft_forward");
  require_size(field, kDim * field.grid.nodes(), "fft_forward");
  SpectralField out{field.grid, std::vector<Complex>(kDim * field.grid.spectral_size())};
  for (std::size_t a = 0; a < kDim; ++a) fft.forward(field.component(a), out.component(a));
  return out;
}

inline VectorField fft_inverse(const Fft2d& fft, SpectralField spectrum) {
  require_same_grid(fft.grid(), spectrum.grid, "fft_inverse");
  if (spectrum.values.size() != kDim * spectrum.grid.spectral_size()) {
    throw std::invalid_argument("fft_inverse: size mismatch");
  }
  VectorField out(spectrum.grid);
  for (std::size_t a = 0; a < kDim; ++a) fft.inverse(spectrum.component(a), out.component(a));
  return out;
}

}  // namespace jfft
