/**
 * @file solver.hpp
 * @brief Preconditioned conjugate gradients with Green-norm termination and
 * the Newton driver for the (linear) cell problem.
 */
#pragma once

#include "jfft/grid.hpp"
#include "jfft/operators.hpp"
#include "jfft/preconditioners.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace jfft {

/// Raised when the recurrence produces non-finite values or breaks down.
class SolverAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Termination { Converged, IterationCap };

inline std::string_view to_string(Termination t) {
  return t == Termination::Converged ? "converged" : "iteration-cap";
}

struct PcgOptions {
  double eta = 1e-6;
  std::size_t max_iter = 999;
};

struct SolveReport {
  /// Number of search-direction updates.
  std::size_t iterations = 0;
  /// ||r_k||_G^2 for k = 0..iterations.
  std::vector<double> residual_history;
  /// ||r_k||_2^2, recorded for reference only.
  std::vector<double> residual_l2_history;
  Termination terminated = Termination::IterationCap;
  double wall_time = 0.0;
  VectorField solution;
};

/**
 * Solves K u = f from u_0 = 0 with preconditioner M.
 *
 * Termination is on ||r_k||_G^2 = r_k^T G r_k <= eta for every choice of M,
 * so iteration counts are comparable across preconditioners. With M = Green
 * the preconditioned residual already equals G r_k and is reused.
 */
inline SolveReport pcg(const SystemOperator& K, const VectorField& f, const Preconditioner& M,
                       const GreenOperator& G, const PcgOptions& opts = {}) {
  require_same_grid(K.grid, f.grid, "pcg");
  require_same_grid(K.grid, G.grid(), "pcg");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t ndof = K.dofs();
  const bool green_is_m = kind_of(M) == PreconditionerKind::Green;

  SolveReport rep;
  rep.solution = VectorField(K.grid);
  std::vector<double>& x = rep.solution.values;
  std::vector<double> r = f.values;
  std::vector<double> z(ndof), p(ndof), q(ndof), gr(ndof);

  auto g_norm = [&]() {
    if (green_is_m) return inner(r, z);
    G.apply(r, gr);
    return inner(r, gr);
  };
  auto check_finite = [&](double v, const char* what) {
    if (!std::isfinite(v)) {
      throw SolverAbort(std::string("pcg: non-finite ") + what + " at iteration " +
                        std::to_string(rep.iterations));
    }
  };

  apply_preconditioner(M, r, z);
  double gn = g_norm();
  check_finite(gn, "residual norm");
  rep.residual_history.push_back(gn);
  rep.residual_l2_history.push_back(inner(r, r));

  if (gn <= opts.eta) {
    rep.terminated = Termination::Converged;
  } else {
    p = z;
    double rz = inner(r, z);
    while (rep.iterations < opts.max_iter) {
      apply_K(K, p, q);
      const double pq = inner(p, q);
      check_finite(pq, "curvature");
      if (pq <= 0.0) {
        throw SolverAbort("pcg: non-positive curvature p^T K p = " + std::to_string(pq) +
                          " at iteration " + std::to_string(rep.iterations));
      }
      const double alpha = rz / pq;
      for (std::size_t k = 0; k < ndof; ++k) {
        x[k] += alpha * p[k];
        r[k] -= alpha * q[k];
      }
      ++rep.iterations;
      apply_preconditioner(M, r, z);
      gn = g_norm();
      check_finite(gn, "residual norm");
      rep.residual_history.push_back(gn);
      rep.residual_l2_history.push_back(inner(r, r));
      if (gn <= opts.eta) {
        rep.terminated = Termination::Converged;
        break;
      }
      const double rz_new = inner(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t k = 0; k < ndof; ++k) p[k] = z[k] + beta * p[k];
    }
  }
  subtract_mean(rep.solution);
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

struct NewtonResult {
  SolveReport linear;
  std::size_t newton_iterations = 0;
  /// ||f_1 - (f_0 - K du)|| / ||f_0||: zero for a constant tangent.
  double linearity_defect = 0.0;
  Mandel homogenized_stress{};
};

/// Equilibrium residual -B^T W sigma(E + B u) through the constitutive law.
inline VectorField force_residual(const SystemOperator& op, const VectorField& u, const Mandel& eps_bar) {
  QuadField s = stress(op.rho, op.material, total_strain(u, eps_bar));
  for (double& v : s.values) v *= -op.weights.weight;
  return apply_BT(s);
}

/**
 * One Newton step from u = 0. The material is linear, so the step is exact
 * up to the PCG tolerance; the defect between the updated force residual and
 * the linear residual f - K du certifies the constant tangent.
 */
inline NewtonResult newton_solve(const SystemOperator& op, const Mandel& eps_bar, const Preconditioner& M,
                                 const GreenOperator& G, const PcgOptions& opts = {}) {
  NewtonResult out;
  const VectorField u0(op.grid);
  const VectorField f0 = force_residual(op, u0, eps_bar);
  out.linear = pcg(op, f0, M, G, opts);
  out.newton_iterations = 1;

  const VectorField& du = out.linear.solution;
  const VectorField f1 = force_residual(op, du, eps_bar);
  const VectorField kdu = apply_K(op, du);
  double defect = 0.0;
  for (std::size_t k = 0; k < f1.size(); ++k) {
    const double d = f1[k] - (f0[k] - kdu[k]);
    defect += d * d;
  }
  const double scale = norm2(f0.values);
  out.linearity_defect = scale > 0.0 ? std::sqrt(defect) / scale : std::sqrt(defect);
  if (out.linearity_defect > 1e-10) {
    throw SolverAbort("newton_solve: second Newton step residual " + std::to_string(out.linearity_defect) +
                      " indicates a non-constant tangent");
  }
  out.homogenized_stress = homogenized_stress(op, du, eps_bar);
  return out;
}

}  // namespace jfft
