#include "bst/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "bst/errors.hpp"

namespace bst {

std::string to_string(OptStatus s) {
  switch (s) {
    case OptStatus::converged_gradient: return "converged_gradient";
    case OptStatus::converged_objective: return "converged_objective";
    case OptStatus::max_iterations: return "max_iterations";
    case OptStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool binding(double x, double g, double lo, double hi) {
  return (x <= lo && g > 0.0) || (x >= hi && g < 0.0);
}

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
};

}  // namespace

double projected_gradient_norm(std::span<const double> x, std::span<const double> g,
                               std::span<const double> lower, std::span<const double> upper) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double pg = g[i];
    if (binding(x[i], g[i], lower[i], upper[i])) pg = 0.0;
    m = std::max(m, std::abs(pg));
  }
  return m;
}

BoxLbfgsResult box_lbfgs(const ObjectiveFn& fn, std::vector<double> x0, std::span<const double> lower,
                         std::span<const double> upper, const BoxLbfgsOptions& opt) {
  const std::size_t n = x0.size();
  if (lower.size() != n || upper.size() != n) throw DimensionError("box_lbfgs: bound length mismatch");
  if (opt.memory < 1 || opt.max_iters < 0) throw ConfigError("box_lbfgs: invalid options");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lower[i] <= upper[i])) throw ConfigError("box_lbfgs: empty box");
    if (!(x0[i] >= lower[i] && x0[i] <= upper[i])) throw DomainError("box_lbfgs: x0 outside the box");
  }

  BoxLbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(n);
  res.f = fn(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) throw NumericError("box_lbfgs: non-finite objective at the start point");

  std::deque<Pair> memory;
  std::vector<double> d(n), x_new(n), g_new(n), q(n);
  std::vector<char> free(n);
  res.status = OptStatus::max_iterations;

  for (int it = 0; it < opt.max_iters; ++it) {
    res.projected_gradient_norm = projected_gradient_norm(res.x, g, lower, upper);
    if (res.projected_gradient_norm <= opt.pg_tol) {
      res.status = OptStatus::converged_gradient;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) free[i] = !binding(res.x[i], g[i], lower[i], upper[i]);

    bool steepest = memory.empty();
    bool accepted = false;
    double f_new = res.f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      // Two-loop recursion restricted to the free variables.
      for (std::size_t i = 0; i < n; ++i) q[i] = free[i] ? g[i] : 0.0;
      if (!steepest) {
        std::vector<double> alpha(memory.size());
        std::vector<double> rho(memory.size());
        for (std::size_t k = memory.size(); k-- > 0;) {
          const auto& p = memory[k];
          double sy = 0.0;
          double sq = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            if (free[i]) {
              sy += p.s[i] * p.y[i];
              sq += p.s[i] * q[i];
            }
          rho[k] = sy > 0.0 ? 1.0 / sy : 0.0;
          alpha[k] = rho[k] * sq;
          for (std::size_t i = 0; i < n; ++i)
            if (free[i]) q[i] -= alpha[k] * p.y[i];
        }
        const auto& last = memory.back();
        double sy = 0.0;
        double yy = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          if (free[i]) {
            sy += last.s[i] * last.y[i];
            yy += last.y[i] * last.y[i];
          }
        const double gamma = (sy > 0.0 && yy > 0.0) ? sy / yy : 1.0;
        for (double& v : q) v *= gamma;
        for (std::size_t k = 0; k < memory.size(); ++k) {
          const auto& p = memory[k];
          double yr = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            if (free[i]) yr += p.y[i] * q[i];
          const double beta = rho[k] * yr;
          for (std::size_t i = 0; i < n; ++i)
            if (free[i]) q[i] += p.s[i] * (alpha[k] - beta);
        }
      }
      for (std::size_t i = 0; i < n; ++i) d[i] = free[i] ? -q[i] : 0.0;
      if (!(dot(d, g) < 0.0)) {
        if (steepest) break;
        steepest = true;
        memory.clear();
        continue;
      }

      const double dnorm = std::sqrt(dot(d, d));
      double step = steepest ? std::min(1.0, 1.0 / dnorm) : 1.0;
      for (int ls = 0; ls < opt.max_line_search; ++ls) {
        for (std::size_t i = 0; i < n; ++i) x_new[i] = std::clamp(res.x[i] + step * d[i], lower[i], upper[i]);
        double decrease = 0.0;
        for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x_new[i] - res.x[i]);
        f_new = fn(x_new, g_new);
        ++res.evaluations;
        if (std::isfinite(f_new) && f_new <= res.f + opt.armijo * decrease && f_new <= res.f) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        if (steepest) break;
        steepest = true;
        memory.clear();
      }
    }
    if (!accepted) {
      res.status = OptStatus::line_search_failed;
      break;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - res.x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    const double yy = dot(p.y, p.y);
    if (sy > 1e-10 * yy && sy > 0.0) {
      memory.push_back(std::move(p));
      if (memory.size() > static_cast<std::size_t>(opt.memory)) memory.pop_front();
    }

    const double f_old = res.f;
    res.x.swap(x_new);
    g.swap(g_new);
    res.f = f_new;
    res.iterations = it + 1;
    if (opt.on_iteration) opt.on_iteration(res.iterations, res.f);
    if (std::abs(f_old - f_new) <= opt.rel_f_tol * std::max({std::abs(f_old), std::abs(f_new), 1e-300})) {
      res.status = OptStatus::converged_objective;
      break;
    }
  }
  res.projected_gradient_norm = projected_gradient_norm(res.x, g, lower, upper);
  return res;
}

BoxLbfgsResult box_lbfgs(const ObjectiveFn& f, std::vector<double> x0, double lower, double upper,
                         const BoxLbfgsOptions& options) {
  const std::vector<double> lo(x0.size(), lower);
  const std::vector<double> hi(x0.size(), upper);
  return box_lbfgs(f, std::move(x0), lo, hi, options);
}

}  // namespace bst
