#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bst {

/// Value at x; the gradient is written into `grad`.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BoxLbfgsOptions {
  int max_iters = 50;
  int memory = 10;
  double pg_tol = 1e-10;     ///< stop when the projected gradient inf-norm falls below
  double rel_f_tol = 1e-9;   ///< stop when the relative decrease falls below
  int max_line_search = 40;
  double armijo = 1e-4;
  /// Called after every accepted step with (iteration, objective).
  std::function<void(int, double)> on_iteration;
};

enum class OptStatus { converged_gradient, converged_objective, max_iterations, line_search_failed };

std::string to_string(OptStatus s);

struct BoxLbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  OptStatus status = OptStatus::max_iterations;
  double projected_gradient_norm = 0.0;
};

/// Limited-memory quasi-Newton on the box lower <= x <= upper. Variables held at
/// a bound by the gradient are frozen for the step; the two-loop recursion acts
/// on the rest, and a projected backtracking line search keeps every iterate
/// feasible. Iterates never increase f.
BoxLbfgsResult box_lbfgs(const ObjectiveFn& f, std::vector<double> x0, std::span<const double> lower,
                         std::span<const double> upper, const BoxLbfgsOptions& options = {});

/// Same box on every coordinate.
BoxLbfgsResult box_lbfgs(const ObjectiveFn& f, std::vector<double> x0, double lower, double upper,
                         const BoxLbfgsOptions& options = {});

/// Inf-norm of the projected gradient at x.
double projected_gradient_norm(std::span<const double> x, std::span<const double> g,
                               std::span<const double> lower, std::span<const double> upper);

}  // namespace bst
