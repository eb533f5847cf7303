/**
 * @file preconditioners.hpp
 * @brief Green, Jacobi and Green-Jacobi preconditioners for K(rho).
 *
 * Green:         M^-1 = F^-1 G^ F, with G^ the per-frequency pseudo-inverse
 *                of the reference stiffness K_ref = B^T W C_ref B.
 * Jacobi:        M^-1 = diag(K)^-1, diagonal recovered by probing.
 * Green-Jacobi:  M^-1 = J^1/2 F^-1 G^ F J^1/2.
 */
#pragma once

#include "jfft/fft.hpp"
#include "jfft/grid.hpp"
#include "jfft/operators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace jfft {

/// Dense 2x2 complex block, row-major {(0,0), (0,1), (1,0), (1,1)}.
using Block2 = std::array<Complex, 4>;

inline double block_norm(const Block2& b) {
  double s = 0.0;
  for (const auto& v : b) s += std::norm(v);
  return std::sqrt(s);
}

inline Block2 conjugate_transpose(const Block2& b) {
  return {std::conj(b[0]), std::conj(b[2]), std::conj(b[1]), std::conj(b[3])};
}

/// Eigenvalues (ascending) of the Hermitian part of a 2x2 block.
inline std::array<double, 2> hermitian_eigenvalues(const Block2& b) {
  const double a = b[0].real();
  const double d = b[3].real();
  const double off = std::abs(0.5 * (b[1] + std::conj(b[2])));
  const double mean = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), off);
  return {mean - rad, mean + rad};
}

/**
 * Moore-Penrose pseudo-inverse of a Hermitian 2x2 block. Eigenvalues at or
 * below `cutoff` are treated as zero.
 */
inline Block2 hermitian_pinv(const Block2& blk, double cutoff) {
  const double a = blk[0].real();
  const double d = blk[3].real();
  const Complex b = 0.5 * (blk[1] + std::conj(blk[2]));
  const auto [lo, hi] = hermitian_eigenvalues(blk);
  if (hi <= cutoff) return {};
  if (lo > cutoff) {
    const double det = a * d - std::norm(b);
    return {Complex(d / det), -b / det, -std::conj(b) / det, Complex(a / det)};
  }
  // rank one: projector onto the top eigenvector is (A - lo I) / (hi - lo)
  const double s = 1.0 / ((hi - lo) * hi);
  return {Complex((a - lo) * s), b * s, std::conj(b) * s, Complex((d - lo) * s)};
}

/**
 * Discrete Green's operator of the reference medium, stored as one 2x2
 * block per frequency of the real-to-complex layout.
 */
class GreenOperator {
 public:
  static constexpr double kRelativeCutoff = 1e-12;

  GreenOperator(const Grid& grid, const MaterialModel& reference)
      : grid_(grid), reference_(reference), fft_(grid) {
    assemble();
  }

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] const MaterialModel& reference() const { return reference_; }
  [[nodiscard]] const Fft2d& fft() const { return fft_; }
  /// Fourier blocks of K_ref as obtained from the impulse responses.
  [[nodiscard]] const std::vector<Block2>& stiffness_blocks() const { return stiffness_; }
  /// Pseudo-inverse blocks.
  [[nodiscard]] const std::vector<Block2>& blocks() const { return green_; }

  /// z = F^-1 G^ F r
  void apply(std::span<const double> r, std::span<double> z) const {
    const std::size_t nn = grid_.nodes();
    const std::size_t ns = grid_.spectral_size();
    if (r.size() != kDim * nn || z.size() != kDim * nn) {
      throw std::invalid_argument("apply_green: size mismatch");
    }
    std::vector<Complex> spec(kDim * ns);
    std::span<Complex> s1(spec.data(), ns), s2(spec.data() + ns, ns);
    fft_.forward(r.subspan(0, nn), s1);
    fft_.forward(r.subspan(nn, nn), s2);
    for (std::size_t q = 0; q < ns; ++q) {
      const Block2& g = green_[q];
      const Complex x = s1[q], y = s2[q];
      s1[q] = g[0] * x + g[1] * y;
      s2[q] = g[2] * x + g[3] * y;
    }
    fft_.inverse(s1, z.subspan(0, nn));
    fft_.inverse(s2, z.subspan(nn, nn));
  }

 private:
  void assemble() {
    const std::size_t nn = grid_.nodes();
    const std::size_t ns = grid_.spectral_size();
    const SystemOperator kref = make_reference_operator(grid_, reference_);
    // columns[beta] = FFT of the response to a unit impulse at node 0, component beta
    std::array<std::vector<Complex>, kDim> columns;
    VectorField impulse(grid_), response(grid_);
    for (std::size_t beta = 0; beta < kDim; ++beta) {
      std::fill(impulse.values.begin(), impulse.values.end(), 0.0);
      impulse.values[beta * nn] = 1.0;
      apply_K(kref, impulse.values, response.values);
      columns[beta].resize(kDim * ns);
      for (std::size_t alpha = 0; alpha < kDim; ++alpha) {
        fft_.forward(response.component(alpha), {columns[beta].data() + alpha * ns, ns});
      }
    }
    stiffness_.resize(ns);
    double max_eig = 0.0;
    for (std::size_t q = 0; q < ns; ++q) {
      stiffness_[q] = {columns[0][q], columns[1][q], columns[0][ns + q], columns[1][ns + q]};
      max_eig = std::max(max_eig, hermitian_eigenvalues(stiffness_[q])[1]);
    }
    const double cutoff = kRelativeCutoff * max_eig;
    green_.resize(ns);
    green_[0] = {};  // rigid translations
    for (std::size_t q = 1; q < ns; ++q) green_[q] = hermitian_pinv(stiffness_[q], cutoff);
  }

  Grid grid_;
  MaterialModel reference_;
  Fft2d fft_;
  std::vector<Block2> stiffness_;
  std::vector<Block2> green_;
};

inline void require_spd(const MandelMatrix& c) {
  // Sylvester's criterion on the symmetric 3x3 matrix
  const double m1 = c[0][0];
  const double m2 = c[0][0] * c[1][1] - c[0][1] * c[1][0];
  const double m3 = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) -
                    c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0]) +
                    c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
  bool symmetric = true;
  for (std::size_t i = 0; i < kMandelDim; ++i)
    for (std::size_t j = 0; j < kMandelDim; ++j) symmetric = symmetric && c[i][j] == c[j][i];
  if (!symmetric || !(m1 > 0.0) || !(m2 > 0.0) || !(m3 > 0.0)) {
    throw std::invalid_argument("reference stiffness is not symmetric positive definite");
  }
}

inline std::shared_ptr<const GreenOperator> assemble_green(const Grid& grid, const MaterialModel& reference) {
  require_spd(reference.C0);
  return std::make_shared<const GreenOperator>(grid, reference);
}

inline VectorField apply_green(const GreenOperator& green, const VectorField& r) {
  require_same_grid(green.grid(), r.grid, "apply_green");
  VectorField z(r.grid);
  green.apply(r.values, z.values);
  return z;
}

/// diag(K) and the symmetric-split scaling 1/sqrt(K_II) (zero entries replaced by 1).
struct JacobiDiagonal {
  Grid grid;
  std::vector<double> diagonal;
  std::vector<double> inv_sqrt;
  std::size_t operator_applications = 0;
};

/**
 * Recovers diag(K) of a nearest-neighbour stencil operator with d * 2^d
 * products: each probe is a comb with ones on the nodes of one parity class
 * and one component. Two nodes of the same class are at least two cells
 * apart, so their stencils do not overlap.
 */
template <class ApplyFn>
JacobiDiagonal probe_diagonal(const Grid& grid, ApplyFn&& apply) {
  if (grid.n % 2 != 0) {
    throw std::invalid_argument("diagonal probing requires an even number of nodes per direction");
  }
  const std::size_t nn = grid.nodes();
  JacobiDiagonal jd{grid, std::vector<double>(kDim * nn), std::vector<double>(kDim * nn), 0};
  std::vector<double> comb(kDim * nn), response(kDim * nn);
  for (std::size_t alpha = 0; alpha < kDim; ++alpha) {
    for (std::size_t o2 = 0; o2 < 2; ++o2) {
      for (std::size_t o1 = 0; o1 < 2; ++o1) {
        std::fill(comb.begin(), comb.end(), 0.0);
        for (std::size_t j = o2; j < grid.n; j += 2)
          for (std::size_t i = o1; i < grid.n; i += 2) comb[alpha * nn + grid.index(i, j)] = 1.0;
        apply(std::span<const double>(comb), std::span<double>(response));
        ++jd.operator_applications;
        for (std::size_t j = o2; j < grid.n; j += 2) {
          for (std::size_t i = o1; i < grid.n; i += 2) {
            const std::size_t k = alpha * nn + grid.index(i, j);
            jd.diagonal[k] = response[k];
          }
        }
      }
    }
  }
  for (std::size_t k = 0; k < jd.diagonal.size(); ++k) {
    const double kii = jd.diagonal[k] > 0.0 ? jd.diagonal[k] : 1.0;
    jd.inv_sqrt[k] = 1.0 / std::sqrt(kii);
  }
  return jd;
}

inline std::shared_ptr<const JacobiDiagonal> assemble_jacobi(const SystemOperator& op) {
  return std::make_shared<const JacobiDiagonal>(probe_diagonal(
      op.grid, [&op](std::span<const double> u, std::span<double> out) { apply_K(op, u, out); }));
}

inline void apply_jacobi(const JacobiDiagonal& jd, std::span<const double> r, std::span<double> z) {
  for (std::size_t k = 0; k < r.size(); ++k) z[k] = jd.inv_sqrt[k] * jd.inv_sqrt[k] * r[k];
}

inline void apply_jacobi_half(const JacobiDiagonal& jd, std::span<const double> r, std::span<double> z) {
  for (std::size_t k = 0; k < r.size(); ++k) z[k] = jd.inv_sqrt[k] * r[k];
}

inline VectorField apply_jacobi(const JacobiDiagonal& jd, const VectorField& r) {
  VectorField z(r.grid);
  apply_jacobi(jd, r.values, z.values);
  return z;
}

inline VectorField apply_jacobi_half(const JacobiDiagonal& jd, const VectorField& r) {
  VectorField z(r.grid);
  apply_jacobi_half(jd, r.values, z.values);
  return z;
}

/// z = J^1/2 G J^1/2 r
inline void apply_green_jacobi(const JacobiDiagonal& jd, const GreenOperator& green,
                               std::span<const double> r, std::span<double> z) {
  std::vector<double> scaled(r.size());
  apply_jacobi_half(jd, r, scaled);
  green.apply(scaled, z);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] *= jd.inv_sqrt[k];
}

inline VectorField apply_green_jacobi(const JacobiDiagonal& jd, const GreenOperator& green,
                                      const VectorField& r) {
  VectorField z(r.grid);
  apply_green_jacobi(jd, green, r.values, z.values);
  return z;
}

// Preconditioner choice as a tagged variant.

enum class PreconditionerKind { None, Green, Jacobi, GreenJacobi };

inline std::string_view to_string(PreconditionerKind k) {
  switch (k) {
    case PreconditionerKind::None: return "none";
    case PreconditionerKind::Green: return "green";
    case PreconditionerKind::Jacobi: return "jacobi";
    case PreconditionerKind::GreenJacobi: return "green-jacobi";
  }
  return "?";
}

inline std::optional<PreconditionerKind> parse_preconditioner(std::string_view s) {
  for (auto k : {PreconditionerKind::None, PreconditionerKind::Green, PreconditionerKind::Jacobi,
                 PreconditionerKind::GreenJacobi}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

struct IdentityPreconditioner {};
struct GreenPreconditioner {
  std::shared_ptr<const GreenOperator> green;
};
struct JacobiPreconditioner {
  std::shared_ptr<const JacobiDiagonal> jacobi;
};
struct GreenJacobiPreconditioner {
  std::shared_ptr<const GreenOperator> green;
  std::shared_ptr<const JacobiDiagonal> jacobi;
};

using Preconditioner =
    std::variant<IdentityPreconditioner, GreenPreconditioner, JacobiPreconditioner, GreenJacobiPreconditioner>;

inline PreconditionerKind kind_of(const Preconditioner& m) {
  return static_cast<PreconditionerKind>(m.index());
}

inline void apply_preconditioner(const Preconditioner& m, std::span<const double> r, std::span<double> z) {
  struct Visitor {
    std::span<const double> r;
    std::span<double> z;
    void operator()(const IdentityPreconditioner&) const { std::copy(r.begin(), r.end(), z.begin()); }
    void operator()(const GreenPreconditioner& p) const { p.green->apply(r, z); }
    void operator()(const JacobiPreconditioner& p) const { apply_jacobi(*p.jacobi, r, z); }
    void operator()(const GreenJacobiPreconditioner& p) const {
      apply_green_jacobi(*p.jacobi, *p.green, r, z);
    }
  };
  std::visit(Visitor{r, z}, m);
}

/// Builds the requested preconditioner for `op`, reusing an already assembled Green operator.
inline Preconditioner make_preconditioner(PreconditionerKind kind, const SystemOperator& op,
                                          std::shared_ptr<const GreenOperator> green) {
  switch (kind) {
    case PreconditionerKind::None: return IdentityPreconditioner{};
    case PreconditionerKind::Green: return GreenPreconditioner{std::move(green)};
    case PreconditionerKind::Jacobi: return JacobiPreconditioner{assemble_jacobi(op)};
    case PreconditionerKind::GreenJacobi:
      return GreenJacobiPreconditioner{std::move(green), assemble_jacobi(op)};
  }
  throw std::invalid_argument("unknown preconditioner kind");
}

}  // namespace jfft
