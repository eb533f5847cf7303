/**
 * @file topopt.hpp
 * @brief Phase-field regularized inverse homogenization.
 *
 * Objective for a pixel density rho:
 *   f(rho) = sum_g || avg sigma(E_g + B u_g) - sigma_target,g ||^2
 *          + eta int |grad rho|^2 + 1/eta int rho^2 (1 - rho)^2
 * with one equilibrium solve per load case E_g = e_g (canonical Mandel
 * basis). |grad rho|^2 uses periodic forward differences on the pixel
 * lattice; integrals are pixel sums times the pixel area.
 */
#pragma once

#include "jfft/grid.hpp"
#include "jfft/lbfgs.hpp"
#include "jfft/material.hpp"
#include "jfft/operators.hpp"
#include "jfft/preconditioners.hpp"
#include "jfft/solver.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

namespace jfft {

inline constexpr std::size_t kLoadCases = kMandelDim;
using LoadArray = std::array<Mandel, kLoadCases>;
using LoadCounts = std::array<std::size_t, kLoadCases>;

struct TopOptConfig {
  std::size_t n = 32;
  double eta_pf = 0.01;
  double k_target = 0.025;
  double mu_target = 0.15;
  MaterialModel material = elastic_mandel(2.0 / 3.0, 0.5);
  /// Preconditioner of the solves that drive the optimization.
  PreconditionerKind preconditioner = PreconditionerKind::GreenJacobi;
  /// Additional preconditioners whose iteration counts are recorded.
  std::vector<PreconditionerKind> monitor;
  std::size_t monitor_stride = 1;
  PcgOptions pcg{1e-6, 999};
  LbfgsOptions lbfgs{10, 500, 1e-9, 1e-10, 1e-4, 40, 0.1};
  std::uint64_t seed = 0;
  /// Densities below this are clamped before solving so K stays semi-definite.
  double rho_floor = 1e-12;
  std::size_t threads = 1;
  /// Starting density; uniform noise U(0, 1) from `seed` when absent.
  std::optional<ScalarField> initial;
};

/// sigma_target = C_target e with lambda_t = K_t - 2 mu_t / 3.
inline Mandel target_stress(double k_target, double mu_target, const Mandel& eps_bar) {
  return matvec(isotropic_mandel(k_target - 2.0 * mu_target / 3.0, mu_target), eps_bar);
}

inline LoadArray canonical_loads() {
  LoadArray loads{};
  for (std::size_t g = 0; g < kLoadCases; ++g) loads[g][g] = 1.0;
  return loads;
}

struct PhaseFieldTerms {
  /// eta * int |grad rho|^2 and its derivative per pixel.
  double gradient_term = 0.0;
  std::vector<double> d_gradient_term;
  /// 1/eta * int rho^2 (1 - rho)^2 and its derivative per pixel.
  double well_term = 0.0;
  std::vector<double> d_well_term;

  [[nodiscard]] double value() const { return gradient_term + well_term; }
};

inline PhaseFieldTerms phase_field(const ScalarField& rho, double eta) {
  const Grid& g = rho.grid;
  const double area = g.pixel_area();
  const double ih1 = 1.0 / (g.pixel_size[0] * g.pixel_size[0]);
  const double ih2 = 1.0 / (g.pixel_size[1] * g.pixel_size[1]);
  PhaseFieldTerms t;
  t.d_gradient_term.assign(rho.size(), 0.0);
  t.d_well_term.assign(rho.size(), 0.0);
  double grad_sum = 0.0, well_sum = 0.0;
  for (std::size_t j = 0; j < g.n; ++j) {
    for (std::size_t i = 0; i < g.n; ++i) {
      const std::size_t p = g.index(i, j);
      const double r = rho[p];
      const double dx = rho.at(g.next(i), j) - r;
      const double dy = rho.at(i, g.next(j)) - r;
      grad_sum += dx * dx * ih1 + dy * dy * ih2;
      // d/d rho of the forward differences starting at p and ending at p
      const double back_x = r - rho.at(g.prev(i), j);
      const double back_y = r - rho.at(i, g.prev(j));
      t.d_gradient_term[p] = 2.0 * eta * area * ((back_x - dx) * ih1 + (back_y - dy) * ih2);
      well_sum += r * r * (1.0 - r) * (1.0 - r);
      t.d_well_term[p] = area / eta * 2.0 * r * (1.0 - r) * (1.0 - 2.0 * r);
    }
  }
  t.gradient_term = eta * area * grad_sum;
  t.well_term = area / eta * well_sum;
  return t;
}

struct TopOptEvaluation {
  double value = 0.0;
  double stress_part = 0.0;
  double pf_part = 0.0;
  std::vector<double> gradient;
  LoadArray sigma_bar{};
  LoadCounts pcg_iterations{};
  std::size_t clamped = 0;
};

/// Objective, adjoint gradient and iteration-count probes for one configuration.
class TopOptProblem {
 public:
  explicit TopOptProblem(TopOptConfig cfg)
      : cfg_(std::move(cfg)), grid_(make_grid(cfg_.n)), green_(assemble_green(grid_, cfg_.material)) {
    const LoadArray loads = canonical_loads();
    for (std::size_t g = 0; g < kLoadCases; ++g) targets_[g] = target_stress(cfg_.k_target, cfg_.mu_target, loads[g]);
  }

  [[nodiscard]] const TopOptConfig& config() const { return cfg_; }
  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] const LoadArray& targets() const { return targets_; }
  [[nodiscard]] std::shared_ptr<const GreenOperator> green() const { return green_; }

  /**
   * Stress-mismatch gradient: for load g with total strain eps_g and
   * mismatch m_g = avg sigma_g - target_g,
   *   d f / d rho_p = 2/|Y| sum_g sum_{Q in p} w_Q a_g,Q^T C0 eps_g,Q,
   * where a_g = E(m_g) + B lambda_g is the total strain of the adjoint
   * problem K lambda_g = f(m_g). The system is linear in the macroscopic
   * strain, so a_g = sum_i m_g,i eps_i is assembled from the load-case
   * solutions without further solves.
   */
  [[nodiscard]] TopOptEvaluation evaluate(const ScalarField& rho, bool with_gradient = true) const {
    require_same_grid(rho.grid, grid_, "topopt evaluate");
    TopOptEvaluation ev;
    ScalarField solid = rho;
    for (double& r : solid.values) {
      if (!(r >= cfg_.rho_floor)) {
        r = cfg_.rho_floor;
        ++ev.clamped;
      }
    }
    const SystemOperator op = make_operator(solid, cfg_.material);
    const Preconditioner M = make_preconditioner(cfg_.preconditioner, op, green_);
    const LoadArray loads = canonical_loads();

    std::array<NewtonResult, kLoadCases> sols;
    auto solve = [&](std::size_t g) { return newton_solve(op, loads[g], M, *green_, cfg_.pcg); };
    if (cfg_.threads > 1) {
      std::array<std::future<NewtonResult>, kLoadCases> fut;
      for (std::size_t g = 0; g < kLoadCases; ++g) fut[g] = std::async(std::launch::async, solve, g);
      for (std::size_t g = 0; g < kLoadCases; ++g) sols[g] = fut[g].get();
    } else {
      for (std::size_t g = 0; g < kLoadCases; ++g) sols[g] = solve(g);
    }

    LoadArray mismatch{};
    for (std::size_t g = 0; g < kLoadCases; ++g) {
      const SolveReport& rep = sols[g].linear;
      if (rep.terminated == Termination::IterationCap && rep.residual_history.back() > 100.0 * cfg_.pcg.eta) {
        throw SolverAbort("topopt: equilibrium solve for load case " + std::to_string(g) +
                          " hit the iteration cap with ||r||_G^2 = " + std::to_string(rep.residual_history.back()));
      }
      ev.pcg_iterations[g] = rep.iterations;
      ev.sigma_bar[g] = sols[g].homogenized_stress;
      for (std::size_t c = 0; c < kMandelDim; ++c) {
        mismatch[g][c] = ev.sigma_bar[g][c] - targets_[g][c];
        ev.stress_part += mismatch[g][c] * mismatch[g][c];
      }
    }
    const PhaseFieldTerms pf = phase_field(rho, cfg_.eta_pf);
    ev.pf_part = pf.value();
    ev.value = ev.stress_part + ev.pf_part;
    if (!with_gradient) return ev;

    std::array<QuadField, kLoadCases> eps;
    for (std::size_t g = 0; g < kLoadCases; ++g) eps[g] = total_strain(sols[g].linear.solution, loads[g]);
    const std::size_t nq = grid_.quad_points();
    const double scale = 2.0 * op.weights.weight / grid_.volume();
    ev.gradient.assign(grid_.pixels(), 0.0);
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = grid_.pixel_of_quad(q);
      if (solid[p] != rho[p]) continue;  // clamped: locally constant
      std::array<Mandel, kLoadCases> e{};
      for (std::size_t g = 0; g < kLoadCases; ++g) e[g] = eps[g].at(q);
      double acc = 0.0;
      for (std::size_t g = 0; g < kLoadCases; ++g) {
        Mandel adj{};
        for (std::size_t i = 0; i < kLoadCases; ++i)
          for (std::size_t c = 0; c < kMandelDim; ++c) adj[c] += mismatch[g][i] * e[i][c];
        acc += dot(adj, matvec(cfg_.material.C0, e[g]));
      }
      ev.gradient[p] += scale * acc;
    }
    for (std::size_t p = 0; p < grid_.pixels(); ++p) ev.gradient[p] += pf.d_gradient_term[p] + pf.d_well_term[p];
    return ev;
  }

  /// PCG iteration counts of the three load cases with another preconditioner.
  [[nodiscard]] LoadCounts count_iterations(const ScalarField& rho, PreconditionerKind kind) const {
    ScalarField solid = rho;
    for (double& r : solid.values) r = r >= cfg_.rho_floor ? r : cfg_.rho_floor;
    const SystemOperator op = make_operator(solid, cfg_.material);
    const Preconditioner M = make_preconditioner(kind, op, green_);
    const LoadArray loads = canonical_loads();
    LoadCounts counts{};
    for (std::size_t g = 0; g < kLoadCases; ++g) {
      counts[g] = pcg(op, assemble_rhs(op, loads[g]), M, *green_, cfg_.pcg).iterations;
    }
    return counts;
  }

 private:
  TopOptConfig cfg_;
  Grid grid_;
  std::shared_ptr<const GreenOperator> green_;
  LoadArray targets_{};
};

struct OptRecord {
  std::size_t iteration = 0;
  double objective = 0.0;
  double stress_part = 0.0;
  double pf_part = 0.0;
  std::size_t clamped = 0;
  LoadCounts driver_iterations{};
  /// Counts of monitored preconditioners, present on monitored iterations only.
  std::map<PreconditionerKind, LoadCounts> monitored;
};

struct OptHistory {
  std::vector<OptRecord> records;
};

struct TopOptResult {
  ScalarField rho;
  OptHistory history;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
  std::size_t evaluations = 0;
};

inline ScalarField random_density(const Grid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  ScalarField rho(grid);
  for (double& v : rho.values) v = uni(rng);
  return rho;
}

/**
 * L-BFGS on the phase-field objective. Every equilibrium solve starts from
 * u = 0. `on_record` sees each history entry and the density it belongs to
 * (iteration 0 is the initial density).
 */
inline TopOptResult minimize_topology(
    const TopOptConfig& cfg,
    const std::function<void(const OptRecord&, const ScalarField&)>& on_record = {}) {
  TopOptProblem problem(cfg);
  const Grid& grid = problem.grid();
  ScalarField rho = cfg.initial ? *cfg.initial : random_density(grid, cfg.seed);
  require_same_grid(rho.grid, grid, "minimize_topology");

  TopOptResult result;
  TopOptEvaluation last;
  bool first = true;
  auto eval = [&](const std::vector<double>& x, std::vector<double>& grad) {
    ScalarField trial(grid);
    trial.values = x;
    try {
      last = problem.evaluate(trial);
    } catch (const SolverAbort&) {
      if (first) throw;
      return std::numeric_limits<double>::infinity();
    }
    first = false;
    grad = last.gradient;
    return last.value;
  };
  auto record = [&](std::size_t it, const ScalarField& current, const TopOptEvaluation& ev) {
    OptRecord rec{it, ev.value, ev.stress_part, ev.pf_part, ev.clamped, ev.pcg_iterations, {}};
    if (!cfg.monitor.empty() && it % std::max<std::size_t>(cfg.monitor_stride, 1) == 0) {
      for (auto kind : cfg.monitor) {
        rec.monitored[kind] = kind == cfg.preconditioner ? ev.pcg_iterations : problem.count_iterations(current, kind);
      }
    }
    result.history.records.push_back(rec);
    if (on_record) on_record(rec, current);
  };

  std::vector<double> g0;
  eval(rho.values, g0);
  record(0, rho, last);

  // The accepted step is always the most recent evaluation.
  auto res = lbfgs_minimize(eval, rho.values, cfg.lbfgs,
                            [&](std::size_t k, std::span<const double> x, double, std::span<const double>) {
                              ScalarField current(grid);
                              current.values.assign(x.begin(), x.end());
                              record(k + 1, current, last);
                            });
  result.rho = ScalarField(grid);
  result.rho.values = std::move(res.x);
  result.status = res.status;
  result.evaluations = res.evaluations + 1;
  return result;
}

}  // namespace jfft
