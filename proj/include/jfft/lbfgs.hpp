/**
 * @file lbfgs.hpp
 * @brief Limited-memory BFGS with backtracking Armijo line search.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace jfft {

struct LbfgsOptions {
  std::size_t memory = 10;
  std::size_t max_iterations = 200;
  /// Stop when (f_k - f_{k+1}) / max(1, |f_k|) falls below this.
  double f_tolerance = 1e-9;
  double g_tolerance = 1e-10;
  double armijo_c1 = 1e-4;
  std::size_t max_backtracks = 40;
  /// Max-norm of the very first step.
  double initial_step = 0.1;
};

enum class LbfgsStatus { Converged, MaxIterations, LineSearchFailed };

inline std::string_view to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::MaxIterations: return "max-iterations";
    case LbfgsStatus::LineSearchFailed: return "line-search-failed";
  }
  return "?";
}

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
};

/**
 * Minimizes f starting at x0.
 *
 * `eval(x, grad) -> double` returns f(x) and writes the gradient.
 * `on_accept(k, x, f, g)` is called after every accepted step.
 */
template <class EvalFn, class AcceptFn>
LbfgsResult lbfgs_minimize(EvalFn&& eval, std::vector<double> x0, const LbfgsOptions& opts, AcceptFn&& on_accept) {
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(n), g_new(n), x_new(n), d(n), alpha(opts.memory);
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;

  auto dotp = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  };
  auto inf_norm = [](const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
  };
  auto steepest = [&]() {
    const double gmax = inf_norm(g);
    const double scale = gmax > 0.0 ? opts.initial_step / gmax : 0.0;
    for (std::size_t i = 0; i < n; ++i) d[i] = -scale * g[i];
  };

  double f = eval(res.x, g);
  ++res.evaluations;
  res.value = f;

  for (std::size_t k = 0; k < opts.max_iterations; ++k) {
    if (inf_norm(g) <= opts.g_tolerance) {
      res.status = LbfgsStatus::Converged;
      return res;
    }
    // two-loop recursion
    if (S.empty()) {
      steepest();
    } else {
      d = g;
      for (std::size_t i = S.size(); i-- > 0;) {
        alpha[i] = rho[i] * dotp(S[i], d);
        for (std::size_t j = 0; j < n; ++j) d[j] -= alpha[i] * Y[i][j];
      }
      const double gamma = dotp(S.back(), Y.back()) / dotp(Y.back(), Y.back());
      for (double& v : d) v *= gamma;
      for (std::size_t i = 0; i < S.size(); ++i) {
        const double beta = rho[i] * dotp(Y[i], d);
        for (std::size_t j = 0; j < n; ++j) d[j] += (alpha[i] - beta) * S[i][j];
      }
      for (double& v : d) v = -v;
    }
    double gd = dotp(g, d);
    if (!(gd < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      steepest();
      gd = dotp(g, d);
    }

    double t = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (std::size_t ls = 0; ls <= opts.max_backtracks; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + t * d[i];
      f_new = eval(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= f + opts.armijo_c1 * t * gd) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      res.status = LbfgsStatus::LineSearchFailed;
      return res;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dotp(s, y);
    // pairs without positive curvature are skipped
    if (sy > 1e-12 * std::sqrt(dotp(s, s) * dotp(y, y))) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (S.size() > opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    const double decrease = (f - f_new) / std::max(1.0, std::abs(f));
    std::swap(res.x, x_new);
    std::swap(g, g_new);
    f = f_new;
    res.value = f;
    res.iterations = k + 1;
    on_accept(k, std::span<const double>(res.x), f, std::span<const double>(g));
    if (decrease < opts.f_tolerance) {
      res.status = LbfgsStatus::Converged;
      return res;
    }
  }
  res.status = LbfgsStatus::MaxIterations;
  return res;
}

}  // namespace jfft
