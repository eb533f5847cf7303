/**
 * @file grid.hpp
 * @brief Regular periodic 2D grid, field containers and Mandel algebra.
 *
 * Indexing conventions used throughout the library:
 *  - node (i1, i2) and pixel (i1, i2) share the linear index I = i1 + n * i2
 *    (x1 fastest); pixel (i1, i2) has node (i1, i2) as its lower-left corner.
 *  - every pixel is split into two triangles, quadrature point
 *    Q = 2 * pixel + t with t = 0 (lower) and t = 1 (upper).
 *  - vector and quadrature fields store their components as separate
 *    contiguous planes.
 *  - Mandel order is (11, 22, sqrt(2) * 12).
 */
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jfft {

inline constexpr std::size_t kDim = 2;
inline constexpr std::size_t kMandelDim = kDim * (kDim + 1) / 2;
inline constexpr std::size_t kQuadPerPixel = 2;
inline const double kSqrt2 = std::sqrt(2.0);

using Mandel = std::array<double, kMandelDim>;
using MandelMatrix = std::array<std::array<double, kMandelDim>, kMandelDim>;

/// Mandel vector of a symmetric 2x2 tensor given by its entries.
inline Mandel to_mandel(double a11, double a22, double a12) {
  return {a11, a22, kSqrt2 * a12};
}

inline double dot(const Mandel& a, const Mandel& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline Mandel matvec(const MandelMatrix& m, const Mandel& v) {
  Mandel out{};
  for (std::size_t r = 0; r < kMandelDim; ++r) {
    out[r] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2];
  }
  return out;
}

/**
 * @brief Periodic rectangular cell discretized with n nodes per direction.
 *
 * Nodes on the upper/right boundary are identified with those on the
 * lower/left one, so a grid has n^2 nodes and n^2 pixels.
 */
struct Grid {
  std::size_t n = 0;
  std::array<double, kDim> lengths{1.0, 1.0};
  std::array<double, kDim> pixel_size{1.0, 1.0};

  [[nodiscard]] std::size_t nodes() const { return n * n; }
  [[nodiscard]] std::size_t pixels() const { return n * n; }
  [[nodiscard]] std::size_t quad_points() const { return kQuadPerPixel * n * n; }
  [[nodiscard]] double volume() const { return lengths[0] * lengths[1]; }
  [[nodiscard]] double pixel_area() const { return pixel_size[0] * pixel_size[1]; }

  [[nodiscard]] std::size_t index(std::size_t i1, std::size_t i2) const {
    return i1 + n * i2;
  }
  [[nodiscard]] std::array<std::size_t, kDim> coords(std::size_t index) const {
    return {index % n, index / n};
  }
  /// Periodic successor of a per-direction index.
  [[nodiscard]] std::size_t next(std::size_t i) const { return i + 1 == n ? 0 : i + 1; }
  [[nodiscard]] std::size_t prev(std::size_t i) const { return i == 0 ? n - 1 : i - 1; }

  [[nodiscard]] std::size_t quad_index(std::size_t pixel, std::size_t triangle) const {
    return kQuadPerPixel * pixel + triangle;
  }
  [[nodiscard]] std::size_t pixel_of_quad(std::size_t q) const { return q / kQuadPerPixel; }

  /// Number of complex coefficients of the real-to-complex transform.
  [[nodiscard]] std::size_t spectral_size() const { return n * (n / 2 + 1); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.n == b.n && a.lengths == b.lengths;
  }
};

inline Grid make_grid(std::size_t n, std::array<double, kDim> lengths = {1.0, 1.0}) {
  if (n < 2) {
    throw std::invalid_argument("grid needs at least 2 nodes per direction, got " +
                                std::to_string(n));
  }
  for (double l : lengths) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw std::invalid_argument("cell side lengths must be positive and finite");
    }
  }
  Grid g;
  g.n = n;
  g.lengths = lengths;
  g.pixel_size = {lengths[0] / static_cast<double>(n), lengths[1] / static_cast<double>(n)};
  return g;
}

enum class SiteKind { Pixel, Node };

/// One real value per pixel (densities) or per node.
struct ScalarField {
  Grid grid;
  SiteKind site = SiteKind::Pixel;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0, SiteKind s = SiteKind::Pixel)
      : grid(g), site(s), values(g.pixels(), fill) {}

  [[nodiscard]] std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at(std::size_t i1, std::size_t i2) { return values[grid.index(i1, i2)]; }
  [[nodiscard]] double at(std::size_t i1, std::size_t i2) const {
    return values[grid.index(i1, i2)];
  }
};

/// Nodal displacement-like field, components stored as planes of n^2 values.
struct VectorField {
  Grid grid;
  std::vector<double> values;

  VectorField() = default;
  explicit VectorField(const Grid& g, double fill = 0.0) : grid(g), values(kDim * g.nodes(), fill) {}

  [[nodiscard]] std::size_t size() const { return values.size(); }
  std::span<double> component(std::size_t alpha) {
    return {values.data() + alpha * grid.nodes(), grid.nodes()};
  }
  [[nodiscard]] std::span<const double> component(std::size_t alpha) const {
    return {values.data() + alpha * grid.nodes(), grid.nodes()};
  }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Mandel vectors at quadrature points, components stored as planes of N_Q values.
struct QuadField {
  Grid grid;
  std::vector<double> values;

  QuadField() = default;
  explicit QuadField(const Grid& g, double fill = 0.0)
      : grid(g), values(kMandelDim * g.quad_points(), fill) {}

  [[nodiscard]] std::size_t size() const { return values.size(); }
  std::span<double> component(std::size_t c) {
    return {values.data() + c * grid.quad_points(), grid.quad_points()};
  }
  [[nodiscard]] std::span<const double> component(std::size_t c) const {
    return {values.data() + c * grid.quad_points(), grid.quad_points()};
  }
  [[nodiscard]] Mandel at(std::size_t q) const {
    const std::size_t nq = grid.quad_points();
    return {values[q], values[nq + q], values[2 * nq + q]};
  }
  void set(std::size_t q, const Mandel& m) {
    const std::size_t nq = grid.quad_points();
    values[q] = m[0];
    values[nq + q] = m[1];
    values[2 * nq + q] = m[2];
  }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(what) + ": grid mismatch");
  }
}

template <class Field>
void require_size(const Field& f, std::size_t expected, const char* what) {
  if (f.values.size() != expected) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) +
                                " values, got " + std::to_string(f.values.size()));
  }
}

// Small dense helpers on flat spans, shared by the solver and tests.

inline double inner(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(inner(a, a)); }

/// Per-component mean of a vector field.
inline std::array<double, kDim> component_mean(const VectorField& v) {
  std::array<double, kDim> m{};
  for (std::size_t a = 0; a < kDim; ++a) {
    auto c = v.component(a);
    m[a] = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
  }
  return m;
}

inline void subtract_mean(VectorField& v) {
  const auto m = component_mean(v);
  for (std::size_t a = 0; a < kDim; ++a) {
    for (double& x : v.component(a)) x -= m[a];
  }
}

}  // namespace jfft
