/**
 * @file operators.hpp
 * @brief Matrix-free system operator K(rho) = B^T W (rho C0) B and load assembly.
 */
#pragma once

#include "jfft/fem.hpp"
#include "jfft/grid.hpp"
#include "jfft/material.hpp"

#include <algorithm>
#include <span>

namespace jfft {

/// Linearized equilibrium operator for pixel-constant densities.
struct SystemOperator {
  Grid grid;
  ScalarField rho;
  MaterialModel material;
  QuadratureWeights weights;

  [[nodiscard]] std::size_t dofs() const { return kDim * grid.nodes(); }
};

inline SystemOperator make_operator(const ScalarField& rho, const MaterialModel& material) {
  require_size(rho, rho.grid.pixels(), "make_operator");
  require_nonnegative(rho, "make_operator");
  return {rho.grid, rho, material, make_weights(rho.grid)};
}

/// Reference operator: uniform density 1 with the given stiffness.
inline SystemOperator make_reference_operator(const Grid& grid, const MaterialModel& reference) {
  return make_operator(ScalarField(grid, 1.0), reference);
}

/**
 * out = K u, element by element.
 *
 * The per-pixel strain/stress of both triangles is formed on the fly and
 * scattered with B^T, so no quadrature field is stored.
 */
inline void apply_K(const SystemOperator& op, std::span<const double> u, std::span<double> out) {
  const Grid& g = op.grid;
  if (u.size() != op.dofs() || out.size() != op.dofs()) {
    throw std::invalid_argument("apply_K: size mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t nn = g.nodes();
  const double ih1 = 1.0 / g.pixel_size[0];
  const double ih2 = 1.0 / g.pixel_size[1];
  const double is2 = 1.0 / kSqrt2;
  const auto& C = op.material.C0;
  const double w = op.weights.weight;
  const double* u1 = u.data();
  const double* u2 = u.data() + nn;
  double* f1 = out.data();
  double* f2 = out.data() + nn;
  for (std::size_t j = 0; j < g.n; ++j) {
    for (std::size_t i = 0; i < g.n; ++i) {
      const std::size_t p = g.index(i, j);
      const double scale = w * op.rho[p];
      if (scale == 0.0) continue;
      const auto nd = detail::pixel_nodes(g, i, j);
      const auto g1 = detail::triangle_gradients(u1[nd.a], u1[nd.b], u1[nd.c], u1[nd.d], ih1, ih2);
      const auto g2 = detail::triangle_gradients(u2[nd.a], u2[nd.b], u2[nd.c], u2[nd.d], ih1, ih2);
      for (int t = 0; t < 2; ++t) {
        const Mandel e{g1[2 * t], g2[2 * t + 1], (g1[2 * t + 1] + g2[2 * t]) * is2};
        Mandel s = matvec(C, e);
        for (double& v : s) v *= scale;
        const double sx1 = s[0] * ih1, sy1 = s[2] * is2 * ih2;
        const double sy2 = s[1] * ih2, sx2 = s[2] * is2 * ih1;
        if (t == 0) {
          f1[nd.a] -= sx1 + sy1;
          f1[nd.b] += sx1;
          f1[nd.c] += sy1;
          f2[nd.a] -= sy2 + sx2;
          f2[nd.b] += sx2;
          f2[nd.c] += sy2;
        } else {
          f1[nd.d] += sx1 + sy1;
          f1[nd.c] -= sx1;
          f1[nd.b] -= sy1;
          f2[nd.d] += sy2 + sx2;
          f2[nd.c] -= sx2;
          f2[nd.b] -= sy2;
        }
      }
    }
  }
}

inline VectorField apply_K(const SystemOperator& op, const VectorField& u) {
  require_same_grid(op.grid, u.grid, "apply_K");
  VectorField out(op.grid);
  apply_K(op, u.values, out.values);
  return out;
}

/// f = -B^T W (rho C0) E with E the macroscopic strain at every quadrature point.
inline VectorField assemble_rhs(const SystemOperator& op, const Mandel& eps_bar) {
  for (double e : eps_bar) {
    if (!std::isfinite(e)) throw std::invalid_argument("assemble_rhs: non-finite macroscopic strain");
  }
  const Grid& g = op.grid;
  const Mandel sigma0 = matvec(op.material.C0, eps_bar);
  QuadField s(g);
  const std::size_t nq = g.quad_points();
  for (std::size_t q = 0; q < nq; ++q) {
    const double scale = -op.weights.weight * op.rho[g.pixel_of_quad(q)];
    s.values[q] = scale * sigma0[0];
    s.values[nq + q] = scale * sigma0[1];
    s.values[2 * nq + q] = scale * sigma0[2];
  }
  return apply_BT(s);
}

/// Total strain E + B u at every quadrature point.
inline QuadField total_strain(const VectorField& u, const Mandel& eps_bar) {
  QuadField e = apply_B(u);
  const std::size_t nq = u.grid.quad_points();
  for (std::size_t c = 0; c < kMandelDim; ++c) {
    for (std::size_t q = 0; q < nq; ++q) e.values[c * nq + q] += eps_bar[c];
  }
  return e;
}

/// Homogenized stress (1/|Y|) int rho C0 (E + B u).
inline Mandel homogenized_stress(const SystemOperator& op, const VectorField& u, const Mandel& eps_bar) {
  return average_quadfield(stress(op.rho, op.material, total_strain(u, eps_bar)), op.weights);
}

}  // namespace jfft
