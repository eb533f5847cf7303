/**
 * @file material.hpp
 * @brief Density-scaled isotropic linear elasticity in Mandel notation.
 */
#pragma once

#include "jfft/grid.hpp"

#include <stdexcept>
#include <vector>

namespace jfft {

/// Isotropic base stiffness C0 built from the Lame parameters.
struct MaterialModel {
  double lambda0 = 0.0;
  double mu0 = 0.0;
  MandelMatrix C0{};
};

/**
 * Mandel matrix of C_ijkl = lambda d_ij d_kl + mu (d_ik d_jl + d_il d_jk):
 * [[lambda + 2 mu, lambda, 0], [lambda, lambda + 2 mu, 0], [0, 0, 2 mu]].
 */
inline MaterialModel elastic_mandel(double lambda0, double mu0) {
  if (!(mu0 > 0.0) || !(lambda0 + mu0 > 0.0)) {
    throw std::invalid_argument("elastic_mandel: Lame parameters are not positive definite");
  }
  MaterialModel m{lambda0, mu0, {}};
  m.C0 = {{{lambda0 + 2.0 * mu0, lambda0, 0.0},
           {lambda0, lambda0 + 2.0 * mu0, 0.0},
           {0.0, 0.0, 2.0 * mu0}}};
  return m;
}

/// Same Mandel matrix without the positive-definiteness check (target tensors may be auxetic).
inline MandelMatrix isotropic_mandel(double lambda, double mu) {
  return {{{lambda + 2.0 * mu, lambda, 0.0}, {lambda, lambda + 2.0 * mu, 0.0}, {0.0, 0.0, 2.0 * mu}}};
}

inline void require_nonnegative(const ScalarField& rho, const char* what) {
  for (double r : rho.values) {
    if (!(r >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative or NaN density");
  }
}

/// sigma_Q = rho(pixel(Q)) * C0 * eps_Q
inline QuadField stress(const ScalarField& rho, const MaterialModel& mat, const QuadField& eps) {
  require_same_grid(rho.grid, eps.grid, "stress");
  require_size(rho, rho.grid.pixels(), "stress");
  require_size(eps, kMandelDim * eps.grid.quad_points(), "stress");
  require_nonnegative(rho, "stress");
  QuadField out(eps.grid);
  const std::size_t nq = eps.grid.quad_points();
  for (std::size_t q = 0; q < nq; ++q) {
    const double r = rho[eps.grid.pixel_of_quad(q)];
    auto s = matvec(mat.C0, eps.at(q));
    for (double& v : s) v *= r;
    out.set(q, s);
  }
  return out;
}

/// Per-pixel algorithmic tangent rho * C0; independent of the strain.
inline std::vector<MandelMatrix> tangent(const ScalarField& rho, const MaterialModel& mat) {
  std::vector<MandelMatrix> out(rho.size());
  for (std::size_t p = 0; p < rho.size(); ++p) {
    for (std::size_t r = 0; r < kMandelDim; ++r) {
      for (std::size_t c = 0; c < kMandelDim; ++c) out[p][r][c] = rho[p] * mat.C0[r][c];
    }
  }
  return out;
}

}  // namespace jfft
