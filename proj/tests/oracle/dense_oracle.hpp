// Dense reference assembly used only by tests. Shape-function gradients are
// derived from vertex coordinates (barycentric inversion), independently of
// the stencil formulas in the library.
#pragma once

#include "jfft/grid.hpp"
#include "jfft/material.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using jfft::Grid;
using jfft::kMandelDim;

struct Triangle {
  std::array<std::size_t, 3> nodes;
  std::array<std::array<double, 2>, 3> coords;
};

/// The two triangles of pixel (i, j) with unwrapped vertex coordinates.
inline std::array<Triangle, 2> pixel_triangles(const Grid& g, std::size_t i, std::size_t j) {
  const double h1 = g.pixel_size[0], h2 = g.pixel_size[1];
  const double x = i * h1, y = j * h2;
  auto node = [&](std::size_t a, std::size_t b) { return g.index(a % g.n, b % g.n); };
  Triangle lower{{node(i, j), node(i + 1, j), node(i, j + 1)}, {{{x, y}, {x + h1, y}, {x, y + h2}}}};
  Triangle upper{{node(i + 1, j + 1), node(i, j + 1), node(i + 1, j)},
                 {{{x + h1, y + h2}, {x, y + h2}, {x + h1, y}}}};
  return {lower, upper};
}

/// Gradients of the three barycentric basis functions.
inline std::array<std::array<double, 2>, 3> basis_gradients(const Triangle& t) {
  Eigen::Matrix2d J;
  J << t.coords[1][0] - t.coords[0][0], t.coords[2][0] - t.coords[0][0],
      t.coords[1][1] - t.coords[0][1], t.coords[2][1] - t.coords[0][1];
  const Eigen::Matrix2d Jinv = J.inverse();
  // reference gradients: phi0 = 1 - xi - eta, phi1 = xi, phi2 = eta
  const Eigen::Vector2d r0(-1, -1), r1(1, 0), r2(0, 1);
  std::array<std::array<double, 2>, 3> out{};
  int k = 0;
  for (const auto& r : {r0, r1, r2}) {
    const Eigen::Vector2d gr = Jinv.transpose() * r;
    out[k++] = {gr(0), gr(1)};
  }
  return out;
}

/// Dense B, rows c * N_Q + Q (Mandel component planes), columns alpha * N_N + I.
inline Eigen::MatrixXd dense_B(const Grid& g) {
  const std::size_t nq = g.quad_points(), nn = g.nodes();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(kMandelDim * nq, 2 * nn);
  const double s2 = std::sqrt(2.0);
  for (std::size_t j = 0; j < g.n; ++j) {
    for (std::size_t i = 0; i < g.n; ++i) {
      const auto tris = pixel_triangles(g, i, j);
      for (std::size_t t = 0; t < 2; ++t) {
        const std::size_t q = 2 * g.index(i, j) + t;
        const auto grads = basis_gradients(tris[t]);
        for (std::size_t k = 0; k < 3; ++k) {
          const std::size_t I = tris[t].nodes[k];
          B(0 * nq + q, 0 * nn + I) += grads[k][0];
          B(1 * nq + q, 1 * nn + I) += grads[k][1];
          B(2 * nq + q, 0 * nn + I) += grads[k][1] / s2;
          B(2 * nq + q, 1 * nn + I) += grads[k][0] / s2;
        }
      }
    }
  }
  return B;
}

/// Dense W C(rho), block structure over Mandel planes.
inline Eigen::MatrixXd dense_WC(const Grid& g, const std::vector<double>& rho, const jfft::MandelMatrix& C0) {
  const std::size_t nq = g.quad_points();
  const double w = 0.5 * g.pixel_size[0] * g.pixel_size[1];
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(kMandelDim * nq, kMandelDim * nq);
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t r = 0; r < kMandelDim; ++r)
      for (std::size_t c = 0; c < kMandelDim; ++c) M(r * nq + q, c * nq + q) = w * rho[q / 2] * C0[r][c];
  }
  return M;
}

inline Eigen::MatrixXd dense_K(const Grid& g, const std::vector<double>& rho, const jfft::MandelMatrix& C0) {
  const Eigen::MatrixXd B = dense_B(g);
  return B.transpose() * dense_WC(g, rho, C0) * B;
}

/// f = -B^T W C E for macroscopic strain E.
inline Eigen::VectorXd dense_rhs(const Grid& g, const std::vector<double>& rho, const jfft::MandelMatrix& C0,
                                 const jfft::Mandel& E) {
  const std::size_t nq = g.quad_points();
  Eigen::VectorXd Ev(kMandelDim * nq);
  for (std::size_t c = 0; c < kMandelDim; ++c) Ev.segment(c * nq, nq).setConstant(E[c]);
  return -dense_B(g).transpose() * dense_WC(g, rho, C0) * Ev;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double s = std::max(a.norm(), b.norm());
  return s > 0 ? (a - b).norm() / s : 0.0;
}

}  // namespace oracle
