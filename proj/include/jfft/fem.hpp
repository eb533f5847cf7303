/**
 * @file fem.hpp
 * @brief Matrix-free P1 triangle kernels on the periodic grid.
 *
 * Each pixel (i, j) is split along the edge joining nodes (i+1, j) and
 * (i, j+1):
 *   lower triangle t = 0 : nodes (i, j), (i+1, j), (i, j+1)
 *   upper triangle t = 1 : nodes (i+1, j+1), (i, j+1), (i+1, j)
 * Gradients are constant per triangle and evaluated at the centroid.
 */
#pragma once

#include "jfft/grid.hpp"

#include <array>
#include <span>
#include <vector>

namespace jfft {

/// Centroid-rule weights; every triangle has area dx1 * dx2 / 2.
struct QuadratureWeights {
  Grid grid;
  double weight = 0.0;

  [[nodiscard]] double operator[](std::size_t) const { return weight; }
  [[nodiscard]] double total() const { return weight * static_cast<double>(grid.quad_points()); }
};

inline QuadratureWeights make_weights(const Grid& grid) {
  return {grid, 0.5 * grid.pixel_area()};
}

namespace detail {

/// Node indices of one pixel: a = (i, j), b = (i+1, j), c = (i, j+1), d = (i+1, j+1).
struct PixelNodes {
  std::size_t a, b, c, d;
};

inline PixelNodes pixel_nodes(const Grid& g, std::size_t i, std::size_t j) {
  const std::size_t ip = g.next(i);
  const std::size_t jp = g.next(j);
  return {g.index(i, j), g.index(ip, j), g.index(i, jp), g.index(ip, jp)};
}

/// Displacement gradient of both triangles from the four corner values of one component.
/// Returns {d/dx1 lower, d/dx2 lower, d/dx1 upper, d/dx2 upper}.
inline std::array<double, 4> triangle_gradients(double ua, double ub, double uc, double ud,
                                                double inv_h1, double inv_h2) {
  return {(ub - ua) * inv_h1, (uc - ua) * inv_h2, (ud - uc) * inv_h1, (ud - ub) * inv_h2};
}

}  // namespace detail

/**
 * Symmetrized gradient of a nodal field, one Mandel strain per quadrature point.
 */
inline void apply_B(const Grid& g, std::span<const double> u, std::span<double> strain) {
  const std::size_t nn = g.nodes();
  const std::size_t nq = g.quad_points();
  const double ih1 = 1.0 / g.pixel_size[0];
  const double ih2 = 1.0 / g.pixel_size[1];
  const double is2 = 1.0 / kSqrt2;
  const double* u1 = u.data();
  const double* u2 = u.data() + nn;
  double* e0 = strain.data();
  double* e1 = strain.data() + nq;
  double* e2 = strain.data() + 2 * nq;
  for (std::size_t j = 0; j < g.n; ++j) {
    for (std::size_t i = 0; i < g.n; ++i) {
      const auto nd = detail::pixel_nodes(g, i, j);
      const auto g1 = detail::triangle_gradients(u1[nd.a], u1[nd.b], u1[nd.c], u1[nd.d], ih1, ih2);
      const auto g2 = detail::triangle_gradients(u2[nd.a], u2[nd.b], u2[nd.c], u2[nd.d], ih1, ih2);
      const std::size_t q = 2 * g.index(i, j);
      e0[q] = g1[0];
      e1[q] = g2[1];
      e2[q] = (g1[1] + g2[0]) * is2;
      e0[q + 1] = g1[2];
      e1[q + 1] = g2[3];
      e2[q + 1] = (g1[3] + g2[2]) * is2;
    }
  }
}

inline QuadField apply_B(const VectorField& u) {
  require_size(u, kDim * u.grid.nodes(), "apply_B");
  QuadField out(u.grid);
  apply_B(u.grid, u.values, out.values);
  return out;
}

/// Transpose of apply_B (no quadrature weights), accumulated into `forces`.
inline void apply_BT_add(const Grid& g, std::span<const double> stress, std::span<double> forces) {
  const std::size_t nn = g.nodes();
  const std::size_t nq = g.quad_points();
  const double ih1 = 1.0 / g.pixel_size[0];
  const double ih2 = 1.0 / g.pixel_size[1];
  const double is2 = 1.0 / kSqrt2;
  const double* s0 = stress.data();
  const double* s1 = stress.data() + nq;
  const double* s2 = stress.data() + 2 * nq;
  double* f1 = forces.data();
  double* f2 = forces.data() + nn;
  for (std::size_t j = 0; j < g.n; ++j) {
    for (std::size_t i = 0; i < g.n; ++i) {
      const auto nd = detail::pixel_nodes(g, i, j);
      const std::size_t q = 2 * g.index(i, j);
      // lower: d/dx1 = (b - a)/h1, d/dx2 = (c - a)/h2
      {
        const double sx1 = s0[q] * ih1, sy1 = s2[q] * is2 * ih2;  // u1 rows
        const double sy2 = s1[q] * ih2, sx2 = s2[q] * is2 * ih1;  // u2 rows
        f1[nd.a] -= sx1 + sy1;
        f1[nd.b] += sx1;
        f1[nd.c] += sy1;
        f2[nd.a] -= sy2 + sx2;
        f2[nd.b] += sx2;
        f2[nd.c] += sy2;
      }
      // upper: d/dx1 = (d - c)/h1, d/dx2 = (d - b)/h2
      {
        const double sx1 = s0[q + 1] * ih1, sy1 = s2[q + 1] * is2 * ih2;
        const double sy2 = s1[q + 1] * ih2, sx2 = s2[q + 1] * is2 * ih1;
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

inline VectorField apply_BT(const QuadField& s) {
  require_size(s, kMandelDim * s.grid.quad_points(), "apply_BT");
  VectorField out(s.grid);
  apply_BT_add(s.grid, s.values, out.values);
  return out;
}

/// Volume average (1/|Y|) sum_Q w_Q s_Q of each Mandel component.
inline Mandel average_quadfield(const QuadField& s, const QuadratureWeights& w) {
  require_same_grid(s.grid, w.grid, "average_quadfield");
  require_size(s, kMandelDim * s.grid.quad_points(), "average_quadfield");
  Mandel avg{};
  for (std::size_t c = 0; c < kMandelDim; ++c) {
    double acc = 0.0;
    for (double v : s.component(c)) acc += v;
    avg[c] = acc * w.weight / s.grid.volume();
  }
  return avg;
}

}  // namespace jfft
