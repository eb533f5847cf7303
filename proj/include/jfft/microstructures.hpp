/**
 * @file microstructures.hpp
 * @brief Density generators and transforms for the numerical studies.
 *
 * Geometries live on a p x p pixel lattice G_p; the value sampled at node
 * (i1/p, i2/p) owns pixel (i1, i2). refine_to_grid() prolongs a geometry to
 * the finite-element grid T_n with p | n.
 */
#pragma once

#include "jfft/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace jfft {

inline constexpr double kInfiniteContrast = std::numeric_limits<double>::infinity();

/// Pixel lattice of a geometry with p sampling points per direction.
inline Grid geometry_grid(std::size_t p) { return make_grid(p); }

/// rho(x) = chi + (1 - chi) / (1 - dx1) * x1, descending from chi to 1 along x1.
inline ScalarField laminate_density(std::size_t p, double chi_tot) {
  if (!std::isfinite(chi_tot) || chi_tot < 1.0) {
    throw std::invalid_argument("laminate_density: contrast must be finite and >= 1");
  }
  const Grid g = geometry_grid(p);
  const double dx = 1.0 / static_cast<double>(p);
  ScalarField rho(g);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < p; ++i) {
      const double x1 = static_cast<double>(i) * dx;
      rho.at(i, j) = chi_tot + (1.0 - chi_tot) / (1.0 - dx) * x1;
    }
  }
  return rho;
}

/// rho(x) = 0.5 + 0.25 (cos 2pi(x1 - x2) + cos 2pi(x1 + x2)) + 1/chi, with 1/inf = 0.
inline ScalarField cosine_density(std::size_t p, double chi_tot) {
  if (!(chi_tot >= 1.0)) throw std::invalid_argument("cosine_density: contrast must be >= 1");
  const Grid g = geometry_grid(p);
  const double shift = std::isinf(chi_tot) ? 0.0 : 1.0 / chi_tot;
  const double two_pi = 2.0 * std::numbers::pi;
  ScalarField rho(g);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < p; ++i) {
      const double x1 = static_cast<double>(i) / static_cast<double>(p);
      const double x2 = static_cast<double>(j) / static_cast<double>(p);
      const double v = 0.5 + 0.25 * (std::cos(two_pi * (x1 - x2)) + std::cos(two_pi * (x2 + x1)));
      rho.at(i, j) = std::max(v, 0.0) + shift;
    }
  }
  return rho;
}

/// Soft circular inclusion of radius `radius_fraction` (of the cell side) centred in a unit-density matrix.
inline ScalarField inclusion_density(std::size_t p, double rho_soft, double radius_fraction) {
  if (!(radius_fraction > 0.0 && radius_fraction < 0.5)) {
    throw std::invalid_argument("inclusion_density: radius fraction must lie in (0, 0.5)");
  }
  const Grid g = geometry_grid(p);
  ScalarField rho(g, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < p; ++i) {
      const double x1 = static_cast<double>(i) / static_cast<double>(p) - 0.5;
      const double x2 = static_cast<double>(j) / static_cast<double>(p) - 0.5;
      if (std::hypot(x1, x2) < radius_fraction) rho.at(i, j) = rho_soft;
    }
  }
  return rho;
}

/// Periodic convolution with 1/16 [1 2 1]^T [1 2 1].
inline ScalarField gaussian_filter(const ScalarField& rho) {
  const Grid& g = rho.grid;
  ScalarField tmp(g, 0.0, rho.site), out(g, 0.0, rho.site);
  for (std::size_t j = 0; j < g.n; ++j) {
    for (std::size_t i = 0; i < g.n; ++i) {
      tmp.at(i, j) = 0.25 * rho.at(g.prev(i), j) + 0.5 * rho.at(i, j) + 0.25 * rho.at(g.next(i), j);
    }
  }
  for (std::size_t j = 0; j < g.n; ++j) {
    for (std::size_t i = 0; i < g.n; ++i) {
      out.at(i, j) = 0.25 * tmp.at(i, g.prev(j)) + 0.5 * tmp.at(i, j) + 0.25 * tmp.at(i, g.next(j));
    }
  }
  return out;
}

/// 1 where rho_smooth >= 0.5, 1/chi elsewhere.
inline ScalarField threshold(const ScalarField& rho_smooth, double chi_tot) {
  if (!(chi_tot >= 1.0)) throw std::invalid_argument("threshold: contrast must be >= 1");
  const double low = std::isinf(chi_tot) ? 0.0 : 1.0 / chi_tot;
  ScalarField out = rho_smooth;
  for (double& v : out.values) v = v >= 0.5 ? 1.0 : low;
  return out;
}

/// Affine map of the field onto [1/chi, 1], so that max/min equals chi.
inline ScalarField rescale_contrast(const ScalarField& rho, double chi_tot) {
  if (!(chi_tot >= 1.0)) throw std::invalid_argument("rescale_contrast: contrast must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(rho.values.begin(), rho.values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double target_lo = std::isinf(chi_tot) ? 0.0 : 1.0 / chi_tot;
  ScalarField out = rho;
  for (double& v : out.values) {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 1.0;
    v = target_lo + (1.0 - target_lo) * t;
  }
  return out;
}

/// max/min of a density; infinite when the minimum is not positive.
inline double total_contrast(const ScalarField& rho) {
  const auto [lo, hi] = std::minmax_element(rho.values.begin(), rho.values.end());
  if (!(*lo > 0.0)) return kInfiniteContrast;
  return *hi / *lo;
}

/// Piecewise-constant prolongation of a G_p geometry to the pixels of T_n.
inline ScalarField refine_to_grid(const ScalarField& rho, std::size_t n) {
  const std::size_t p = rho.grid.n;
  if (n < p || n % p != 0) {
    throw std::invalid_argument("refine_to_grid: grid size " + std::to_string(n) +
                                " is not a multiple of geometry size " + std::to_string(p));
  }
  const std::size_t f = n / p;
  const Grid g = make_grid(n, rho.grid.lengths);
  ScalarField out(g);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) out.at(i, j) = rho.at(i / f, j / f);
  return out;
}

}  // namespace jfft
