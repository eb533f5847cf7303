/**
 * @file experiments.hpp
 * @brief Experiment runners behind the command-line harness.
 *
 * Each runner takes a parsed config and an optional output directory. With
 * an empty directory nothing is written, which is how the test suites call
 * them. CSV files start with a `# jfft <table> v<version>` comment line.
 */
#pragma once

#include "jfft/config.hpp"
#include "jfft/field_io.hpp"
#include "jfft/microstructures.hpp"
#include "jfft/solver.hpp"
#include "jfft/topopt.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

namespace jfft {

inline constexpr int kCsvVersion = 1;

struct RunContext {
  std::filesystem::path out;
  std::size_t threads = 1;
};

namespace detail {

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& table, const std::vector<std::string>& columns)
      : os_(path) {
    if (!os_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os_ << "# jfft " << table << " v" << kCsvVersion << '\n';
    for (std::size_t k = 0; k < columns.size(); ++k) os_ << (k ? "," : "") << columns[k];
    os_ << '\n';
  }

  template <class... Ts>
  void row(const Ts&... cells) {
    std::size_t k = 0;
    ((os_ << (k++ ? "," : "") << cell(cells)), ...);
    os_ << '\n';
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(const char* s) { return s; }
  template <class T>
    requires std::is_integral_v<T>
  static std::string cell(T v) {
    return std::to_string(v);
  }

  std::ofstream os_;
};

inline void prepare_output(const RunContext& ctx, const ConfigDocument& doc) {
  if (ctx.out.empty()) return;
  std::filesystem::create_directories(ctx.out);
  std::ofstream(ctx.out / "config.json") << doc.text;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

/// Runs fn(k) for k in [0, count) on up to `threads` workers. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

/// Exponent range {"min": a, "max": b} or an explicit list of sizes.
inline std::vector<std::size_t> parse_sizes(ConfigSection& s, const std::string& key, std::size_t lo, std::size_t hi,
                                            std::size_t limit) {
  std::vector<std::size_t> out;
  if (s.has(key)) {
    const auto& v = s.raw(key);
    if (v.is_object()) {
      ConfigSection r(v, s.path(key));
      lo = r.get<std::size_t>("min");
      hi = r.get<std::size_t>("max");
      r.finish();
    } else if (v.is_array() && !v.empty()) {
      for (const auto& x : v) {
        if (!x.is_number_unsigned()) throw ConfigError(s.path(key) + ": expected positive integers");
        const auto e = x.get<std::size_t>();
        if (e < 1 || e > 30) throw ConfigError(s.path(key) + ": exponent " + std::to_string(e) + " out of range");
        out.push_back(std::size_t{1} << e);
      }
    } else {
      throw ConfigError(s.path(key) + ": expected {\"min\": a, \"max\": b} or a list of exponents");
    }
  }
  if (out.empty()) {
    if (lo < 1 || hi < lo || hi > 30) throw ConfigError(s.path(key) + ": invalid exponent range");
    for (std::size_t e = lo; e <= hi; ++e) out.push_back(std::size_t{1} << e);
  }
  for (std::size_t v : out) {
    if (v > limit) {
      throw ConfigError(s.path(key) + ": size " + std::to_string(v) + " exceeds " + std::to_string(limit) +
                        "; set \"allow_large\": true to opt in");
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// solve

struct SolveOutcome {
  NewtonResult result;
  PreconditionerKind preconditioner = PreconditionerKind::GreenJacobi;
  std::size_t n = 0;
};

/**
 * {"n": 64, "geometry": {...}, "preconditioner": "green-jacobi",
 *  "strain": [1, 1, 1], "eta": 1e-6, "max_iter": 999, "material": {...}}
 * Writes solution.json/.raw, residuals.csv and result.json.
 */
inline SolveOutcome run_solve(const ConfigDocument& doc, const RunContext& ctx) {
  ConfigSection s(doc.json, "config");
  SolveOutcome out;
  out.n = s.get<std::size_t>("n");
  if (out.n < 2) throw ConfigError(s.path("n") + ": need at least 2 nodes per direction");
  const ScalarField rho = parse_geometry(s.section("geometry"), doc, out.n);
  out.preconditioner = s.has("preconditioner") ? parse_preconditioner_key(s.raw("preconditioner"), s.path("preconditioner"))
                                               : PreconditionerKind::GreenJacobi;
  const Mandel strain = parse_strain(s, "strain");
  const PcgOptions opts{s.get<double>("eta", 1e-6), s.get<std::size_t>("max_iter", 999)};
  const MaterialModel material = parse_material(s);
  s.finish();
  if ((out.preconditioner == PreconditionerKind::Jacobi || out.preconditioner == PreconditionerKind::GreenJacobi) &&
      out.n % 2 != 0) {
    throw ConfigError(s.path("n") + ": diagonal probing needs an even grid size");
  }
  detail::prepare_output(ctx, doc);

  const auto green = assemble_green(rho.grid, material);
  const SystemOperator op = make_operator(rho, material);
  out.result = newton_solve(op, strain, make_preconditioner(out.preconditioner, op, green), *green, opts);

  if (!ctx.out.empty()) {
    const SolveReport& rep = out.result.linear;
    write_field(ctx.out / "solution.json", rep.solution);
    detail::CsvWriter csv(ctx.out / "residuals.csv", "residuals", {"k", "residual_g2", "residual_l2"});
    for (std::size_t k = 0; k < rep.residual_history.size(); ++k) {
      csv.row(k, rep.residual_history[k], rep.residual_l2_history[k]);
    }
    const auto& sb = out.result.homogenized_stress;
    detail::write_json(ctx.out / "result.json",
                       {{"n", out.n},
                        {"preconditioner", to_string(out.preconditioner)},
                        {"strain", {strain[0], strain[1], strain[2]}},
                        {"homogenized_stress", {sb[0], sb[1], sb[2]}},
                        {"iterations", rep.iterations},
                        {"newton_iterations", out.result.newton_iterations},
                        {"terminated", to_string(rep.terminated)},
                        {"final_residual_g2", rep.residual_history.back()},
                        {"wall_time", rep.wall_time}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// laminate and cosine sweeps

struct IterationRow {
  std::string experiment;
  PreconditionerKind preconditioner = PreconditionerKind::Green;
  std::size_t p = 0;
  std::size_t n = 0;
  double chi_tot = 0.0;
  std::size_t iterations = 0;
  /// converged, iteration-cap or aborted.
  std::string terminated;
  double wall_time = 0.0;
};

struct IterationTable {
  std::vector<IterationRow> rows;

  [[nodiscard]] const IterationRow* find(PreconditionerKind kind, std::size_t p, std::size_t n, double chi) const {
    for (const auto& r : rows) {
      if (r.preconditioner == kind && r.p == p && r.n == n && (r.chi_tot == chi)) return &r;
    }
    return nullptr;
  }
};

inline void write_iteration_table(const std::filesystem::path& path, const IterationTable& t) {
  detail::CsvWriter csv(path, "iteration-table",
                        {"experiment", "preconditioner", "p", "n", "chi_tot", "iterations", "terminated", "wall_time"});
  for (const auto& r : t.rows) {
    csv.row(r.experiment, to_string(r.preconditioner), r.p, r.n, r.chi_tot, r.iterations, r.terminated, r.wall_time);
  }
}

namespace detail {

/**
 * {"p": {"min": 3, "max": 8}, "n": {"min": 3, "max": 8}, "contrasts": [1e4],
 *  "preconditioners": ["green", "jacobi", "green-jacobi"], "eta": 1e-6,
 *  "max_iter": 999, "allow_large": false, "strain": [1, 1, 1]}
 * Sizes are exponents of two; cells with p > n are skipped.
 */
template <class Generator>
IterationTable run_sweep(const ConfigDocument& doc, const RunContext& ctx, const std::string& experiment,
                         std::vector<double> default_contrasts, Generator&& generate) {
  ConfigSection s(doc.json, "config");
  const bool allow_large = s.get<bool>("allow_large", false);
  const std::size_t limit = allow_large ? std::size_t{1} << 10 : std::size_t{1} << 8;
  const auto ps = parse_sizes(s, "p", 2, 8, limit);
  const auto ns = parse_sizes(s, "n", 2, 8, limit);
  const auto contrasts = parse_contrast_list(s, "contrasts", std::move(default_contrasts));
  const auto kinds = parse_preconditioner_list(
      s, "preconditioners", {PreconditionerKind::Green, PreconditionerKind::Jacobi, PreconditionerKind::GreenJacobi});
  const PcgOptions opts{s.get<double>("eta", 1e-6), s.get<std::size_t>("max_iter", 999)};
  const Mandel strain = parse_strain(s, "strain");
  const MaterialModel material = parse_material(s);
  s.finish();
  for (double chi : contrasts) generate(2, chi);  // validates the contrast up front
  detail::prepare_output(ctx, doc);

  struct Cell {
    std::size_t p, n;
    double chi;
  };
  std::vector<Cell> cells;
  for (double chi : contrasts)
    for (std::size_t n : ns)
      for (std::size_t p : ps)
        if (p <= n) cells.push_back({p, n, chi});

  std::map<std::size_t, std::shared_ptr<const GreenOperator>> greens;
  for (std::size_t n : ns) greens[n] = assemble_green(make_grid(n), material);

  IterationTable table;
  table.rows.resize(cells.size() * kinds.size());
  detail::parallel_for(cells.size(), ctx.threads, [&](std::size_t c) {
    const Cell& cell = cells[c];
    const ScalarField rho = refine_to_grid(generate(cell.p, cell.chi), cell.n);
    const SystemOperator op = make_operator(rho, material);
    const auto& green = greens.at(cell.n);
    const VectorField f = assemble_rhs(op, strain);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      IterationRow& row = table.rows[c * kinds.size() + k];
      row = {experiment, kinds[k], cell.p, cell.n, cell.chi, 0, "", 0.0};
      try {
        const auto rep = pcg(op, f, make_preconditioner(kinds[k], op, green), *green, opts);
        row.iterations = rep.iterations;
        row.terminated = std::string(to_string(rep.terminated));
        row.wall_time = rep.wall_time;
      } catch (const SolverAbort&) {
        row.iterations = opts.max_iter;
        row.terminated = "aborted";
      }
    }
  });
  if (!ctx.out.empty()) write_iteration_table(ctx.out / "iterations.csv", table);
  return table;
}

}  // namespace detail

inline IterationTable run_laminate_sweep(const ConfigDocument& doc, const RunContext& ctx) {
  return detail::run_sweep(doc, ctx, "laminate", {1e4}, [](std::size_t p, double chi) {
    if (std::isinf(chi)) throw ConfigError("config.contrasts: the laminate needs a finite contrast");
    return laminate_density(p, chi);
  });
}

inline IterationTable run_cosine_sweep(const ConfigDocument& doc, const RunContext& ctx) {
  return detail::run_sweep(doc, ctx, "cosine", {1e4, kInfiniteContrast},
                           [](std::size_t p, double chi) { return cosine_density(p, chi); });
}

// ---------------------------------------------------------------------------
// motivating example: filtered inclusion

struct MotivateStep {
  std::size_t step = 0;
  double contrast = 0.0;
  std::map<PreconditionerKind, std::size_t> iterations;
  std::map<PreconditionerKind, std::string> terminated;
};

struct MotivateOutcome {
  std::vector<MotivateStep> steps;
  /// Solved step with the most Green iterations.
  std::optional<std::size_t> step_I;
  /// First step whose contrast reached the stop contrast.
  std::optional<std::size_t> step_II;
};

/**
 * {"n": 128, "p": 128, "rho_soft": 1e-4, "radius_fraction": 0.25,
 *  "stop_contrast": 100, "max_steps": 2000, "solve_stride": 1,
 *  "preconditioners": ["green", "green-jacobi"], "eta": 1e-6, "max_iter": 999}
 * The density is filtered on the geometry lattice and refined to n before each solve.
 */
inline MotivateOutcome run_motivate(const ConfigDocument& doc, const RunContext& ctx) {
  ConfigSection s(doc.json, "config");
  const auto n = s.get<std::size_t>("n", 256);
  const auto p = s.get<std::size_t>("p", n);
  const double rho_soft = s.get<double>("rho_soft", 1e-4);
  const double radius = s.get<double>("radius_fraction", 0.25);
  const double stop = s.get<double>("stop_contrast", 1e2);
  const auto max_steps = s.get<std::size_t>("max_steps", 2000);
  const auto stride = std::max<std::size_t>(1, s.get<std::size_t>("solve_stride", 1));
  const auto kinds =
      parse_preconditioner_list(s, "preconditioners", {PreconditionerKind::Green, PreconditionerKind::GreenJacobi});
  const PcgOptions opts{s.get<double>("eta", 1e-6), s.get<std::size_t>("max_iter", 999)};
  const Mandel strain = parse_strain(s, "strain");
  const MaterialModel material = parse_material(s);
  s.finish();
  if (n % 2 != 0 || p < 2 || n % p != 0) throw ConfigError("config.n: need an even n that is a multiple of p");
  if (!(rho_soft > 0.0) || !(radius > 0.0 && radius < 0.5)) {
    throw ConfigError("config: rho_soft must be positive and radius_fraction in (0, 0.5)");
  }
  detail::prepare_output(ctx, doc);

  // filter first, solve afterwards: the densities are cheap, the solves are not
  std::vector<std::pair<std::size_t, ScalarField>> solve_points;
  std::vector<MotivateStep> steps;
  ScalarField rho = inclusion_density(p, rho_soft, radius);
  for (std::size_t i = 0; i <= max_steps; ++i) {
    const double chi = total_contrast(rho);
    const bool last = chi <= stop || i == max_steps;
    if (i % stride == 0 || last) {
      steps.push_back({i, chi, {}, {}});
      solve_points.emplace_back(i, rho);
    }
    if (last) break;
    rho = gaussian_filter(rho);
  }

  const auto green = assemble_green(make_grid(n), material);
  detail::parallel_for(steps.size(), ctx.threads, [&](std::size_t k) {
    const SystemOperator op = make_operator(refine_to_grid(solve_points[k].second, n), material);
    const VectorField f = assemble_rhs(op, strain);
    for (auto kind : kinds) {
      try {
        const auto rep = pcg(op, f, make_preconditioner(kind, op, green), *green, opts);
        steps[k].iterations[kind] = rep.iterations;
        steps[k].terminated[kind] = std::string(to_string(rep.terminated));
      } catch (const SolverAbort&) {
        steps[k].iterations[kind] = opts.max_iter;
        steps[k].terminated[kind] = "aborted";
      }
    }
  });

  MotivateOutcome out;
  out.steps = std::move(steps);
  std::size_t best = 0;
  for (const auto& st : out.steps) {
    auto it = st.iterations.find(PreconditionerKind::Green);
    if (it != st.iterations.end() && (!out.step_I || it->second > best)) {
      best = it->second;
      out.step_I = st.step;
    }
    if (!out.step_II && st.contrast <= stop) out.step_II = st.step;
  }

  if (!ctx.out.empty()) {
    detail::CsvWriter csv(ctx.out / "motivate.csv", "motivate",
                          {"step", "chi_tot", "preconditioner", "iterations", "terminated"});
    for (const auto& st : out.steps)
      for (auto kind : kinds) csv.row(st.step, st.contrast, to_string(kind), st.iterations.at(kind), st.terminated.at(kind));
    nlohmann::json summary = {{"n", n}, {"p", p}, {"solved_steps", out.steps.size()}};
    summary["step_I"] = out.step_I ? nlohmann::json(*out.step_I) : nlohmann::json(nullptr);
    summary["step_II"] = out.step_II ? nlohmann::json(*out.step_II) : nlohmann::json(nullptr);
    detail::write_json(ctx.out / "summary.json", summary);
  }
  return out;
}

// ---------------------------------------------------------------------------
// topology optimization

/**
 * {"n": 32, "eta_pf": 0.01, "k_target": 0.025, "mu_target": 0.15,
 *  "lbfgs_memory": 10, "max_iterations": 500, "f_tolerance": 1e-9,
 *  "seed": 0, "preconditioner": "green-jacobi", "monitor": ["green"],
 *  "monitor_stride": 1, "eta": 1e-6, "max_iter": 999,
 *  "snapshot_stride": 0, "initial": "rho.json"}
 */
inline TopOptConfig parse_topopt_config(const ConfigDocument& doc, std::size_t threads, std::size_t* snapshot_stride) {
  ConfigSection s(doc.json, "config");
  TopOptConfig cfg;
  cfg.n = s.get<std::size_t>("n", cfg.n);
  cfg.eta_pf = s.get<double>("eta_pf", cfg.eta_pf);
  cfg.k_target = s.get<double>("k_target", cfg.k_target);
  cfg.mu_target = s.get<double>("mu_target", cfg.mu_target);
  cfg.lbfgs.memory = s.get<std::size_t>("lbfgs_memory", cfg.lbfgs.memory);
  cfg.lbfgs.max_iterations = s.get<std::size_t>("max_iterations", cfg.lbfgs.max_iterations);
  cfg.lbfgs.f_tolerance = s.get<double>("f_tolerance", cfg.lbfgs.f_tolerance);
  cfg.lbfgs.initial_step = s.get<double>("initial_step", cfg.lbfgs.initial_step);
  cfg.seed = s.get<std::uint64_t>("seed", cfg.seed);
  if (s.has("preconditioner")) cfg.preconditioner = parse_preconditioner_key(s.raw("preconditioner"), s.path("preconditioner"));
  cfg.monitor = parse_preconditioner_list(s, "monitor", {}, true);
  cfg.monitor_stride = s.get<std::size_t>("monitor_stride", cfg.monitor_stride);
  cfg.pcg.eta = s.get<double>("eta", cfg.pcg.eta);
  cfg.pcg.max_iter = s.get<std::size_t>("max_iter", cfg.pcg.max_iter);
  cfg.material = parse_material(s);
  const std::size_t stride = s.get<std::size_t>("snapshot_stride", 0);
  if (snapshot_stride) *snapshot_stride = stride;
  if (s.has("initial")) {
    try {
      cfg.initial = read_scalar_field(resolve_path(doc, s.get<std::string>("initial")));
    } catch (const FieldFileError& e) {
      throw ConfigError(s.path("initial") + ": " + e.what());
    }
  }
  s.finish();
  cfg.threads = threads;
  if (!(cfg.eta_pf > 0.0)) throw ConfigError(s.path("eta_pf") + ": must be positive");
  if (!(cfg.mu_target > 0.0)) throw ConfigError(s.path("mu_target") + ": must be positive");
  if (cfg.n < 2 || cfg.n % 2 != 0) throw ConfigError(s.path("n") + ": need an even grid size");
  if (cfg.lbfgs.memory == 0) throw ConfigError(s.path("lbfgs_memory") + ": must be positive");
  if (cfg.initial && cfg.initial->grid.n != cfg.n) {
    throw ConfigError(s.path("initial") + ": density grid does not match n");
  }
  return cfg;
}

/// Writes history.csv, inner_iterations.csv, rho_final.json and optional snapshots.
inline TopOptResult run_topopt(const ConfigDocument& doc, const RunContext& ctx) {
  std::size_t snapshot_stride = 0;
  const TopOptConfig cfg = parse_topopt_config(doc, ctx.threads, &snapshot_stride);
  detail::prepare_output(ctx, doc);

  std::optional<detail::CsvWriter> history, inner;
  if (!ctx.out.empty()) {
    history.emplace(ctx.out / "history.csv", "topopt-history",
                    std::vector<std::string>{"iteration", "objective", "stress_part", "pf_part", "clamped"});
    inner.emplace(ctx.out / "inner_iterations.csv", "topopt-inner",
                  std::vector<std::string>{"iteration", "preconditioner", "load_case", "iterations"});
  }
  auto on_record = [&](const OptRecord& rec, const ScalarField& rho) {
    if (!history) return;
    history->row(rec.iteration, rec.objective, rec.stress_part, rec.pf_part, rec.clamped);
    for (std::size_t g = 0; g < kLoadCases; ++g)
      inner->row(rec.iteration, to_string(cfg.preconditioner), g, rec.driver_iterations[g]);
    for (const auto& [kind, counts] : rec.monitored) {
      if (kind == cfg.preconditioner) continue;
      for (std::size_t g = 0; g < kLoadCases; ++g) inner->row(rec.iteration, to_string(kind), g, counts[g]);
    }
    if (snapshot_stride > 0 && rec.iteration % snapshot_stride == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "rho_%05zu.json", rec.iteration);
      write_field(ctx.out / name, rho);
    }
  };
  TopOptResult res = minimize_topology(cfg, on_record);
  if (!ctx.out.empty()) {
    write_field(ctx.out / "rho_final.json", res.rho);
    const auto& last = res.history.records.back();
    detail::write_json(ctx.out / "summary.json", {{"status", to_string(res.status)},
                                                   {"outer_iterations", last.iteration},
                                                   {"evaluations", res.evaluations},
                                                   {"objective", last.objective},
                                                   {"stress_part", last.stress_part},
                                                   {"pf_part", last.pf_part}});
  }
  return res;
}

// ---------------------------------------------------------------------------
// smooth versus sharp phase-field density

struct SmoothSharpRun {
  std::string variant;  // smooth or sharp
  double chi_tot = 0.0;
  PreconditionerKind preconditioner = PreconditionerKind::Green;
  SolveReport report;
  bool aborted = false;
};

struct SmoothSharpOutcome {
  std::vector<SmoothSharpRun> runs;

  [[nodiscard]] const SmoothSharpRun* find(const std::string& variant, double chi, PreconditionerKind kind) const {
    for (const auto& r : runs)
      if (r.variant == variant && r.chi_tot == chi && r.preconditioner == kind) return &r;
    return nullptr;
  }
};

/// The smooth field is mapped affinely onto [1/chi, 1]; the sharp field thresholds it at 0.5.
inline SmoothSharpOutcome smooth_vs_sharp(const ScalarField& density, const std::vector<double>& contrasts,
                                          const std::vector<PreconditionerKind>& kinds, const PcgOptions& opts,
                                          const Mandel& strain, const MaterialModel& material,
                                          std::size_t threads = 1) {
  SmoothSharpOutcome out;
  for (double chi : contrasts)
    for (const char* variant : {"smooth", "sharp"})
      for (auto kind : kinds) out.runs.push_back({variant, chi, kind, {}, false});
  const auto green = assemble_green(density.grid, material);
  detail::parallel_for(out.runs.size(), threads, [&](std::size_t k) {
    SmoothSharpRun& run = out.runs[k];
    const ScalarField smooth = rescale_contrast(density, run.chi_tot);
    const ScalarField rho = run.variant == "smooth" ? smooth : threshold(smooth, run.chi_tot);
    const SystemOperator op = make_operator(rho, material);
    try {
      run.report = pcg(op, assemble_rhs(op, strain), make_preconditioner(run.preconditioner, op, green), *green, opts);
    } catch (const SolverAbort&) {
      run.aborted = true;
    }
  });
  return out;
}

/**
 * {"density": "rho_final.json", "contrasts": [1e2, 1e5, 1e8],
 *  "preconditioners": ["green", "green-jacobi"], "eta": 1e-6, "max_iter": 999}
 * Writes residual_histories.csv and summary.csv.
 */
inline SmoothSharpOutcome run_smooth_vs_sharp(const ConfigDocument& doc, const RunContext& ctx) {
  ConfigSection s(doc.json, "config");
  ScalarField density;
  try {
    density = read_scalar_field(resolve_path(doc, s.get<std::string>("density")));
  } catch (const FieldFileError& e) {
    throw ConfigError(s.path("density") + ": " + e.what());
  }
  const auto contrasts = parse_contrast_list(s, "contrasts", {1e2, 1e5, 1e8});
  const auto kinds =
      parse_preconditioner_list(s, "preconditioners", {PreconditionerKind::Green, PreconditionerKind::GreenJacobi});
  const PcgOptions opts{s.get<double>("eta", 1e-6), s.get<std::size_t>("max_iter", 999)};
  const Mandel strain = parse_strain(s, "strain");
  const MaterialModel material = parse_material(s);
  s.finish();
  for (double chi : contrasts)
    if (std::isinf(chi)) throw ConfigError("config.contrasts: smooth-vs-sharp needs finite contrasts");
  if (density.grid.n % 2 != 0) throw ConfigError("config.density: need an even grid size");
  detail::prepare_output(ctx, doc);

  SmoothSharpOutcome out = smooth_vs_sharp(density, contrasts, kinds, opts, strain, material, ctx.threads);
  if (!ctx.out.empty()) {
    detail::CsvWriter hist(ctx.out / "residual_histories.csv", "residual-histories",
                           {"variant", "chi_tot", "preconditioner", "k", "residual_g2"});
    detail::CsvWriter summary(ctx.out / "summary.csv", "smooth-vs-sharp",
                              {"variant", "chi_tot", "preconditioner", "iterations", "terminated", "wall_time"});
    for (const auto& r : out.runs) {
      for (std::size_t k = 0; k < r.report.residual_history.size(); ++k) {
        hist.row(r.variant, r.chi_tot, to_string(r.preconditioner), k, r.report.residual_history[k]);
      }
      summary.row(r.variant, r.chi_tot, to_string(r.preconditioner), r.report.iterations,
                  r.aborted ? std::string("aborted") : std::string(to_string(r.report.terminated)),
                  r.report.wall_time);
    }
  }
  return out;
}

}  // namespace jfft
