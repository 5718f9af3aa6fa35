#include "bst/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bst/errors.hpp"
#include "bst/parallel.hpp"

namespace bst {

void ReconParams::validate() const {
  if (!(lambda >= 0.0 && alpha >= 0.0 && gamma >= 0.0)) throw ConfigError("recon: weights must be nonnegative");
  if (!(log_floor > 0.0)) throw ConfigError("recon: log_floor must be positive");
  if (n1 < 1 || n2 < 1) throw ConfigError("recon: n1 and n2 must be at least 1");
  if (!(tv_beta > 0.0)) throw ConfigError("recon: tv_beta must be positive");
  if (memory < 1 || ftv_iters < 1) throw ConfigError("recon: invalid optimizer settings");
  if (!(a0 >= 0.0 && a0 <= 1.0)) throw ConfigError("recon: a0 must lie in [0, 1]");
  if (warmup < 0 || !(warmup_gamma_decades >= 0.0) || !(warmup_alpha_decades >= 0.0))
    throw ConfigError("recon: invalid warm-up schedule");
}

std::vector<std::size_t> ReconResult::active_set() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a[j] > 0.5) out.push_back(j);
  return out;
}

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite input");
}

// Poisson negative log-likelihood; fills r = d/dmu when requested.
double poisson_nll(std::span<const double> mu, std::span<const double> b, double floor,
                   std::vector<double>* r) {
  if (mu.size() != b.size()) throw DimensionError("poisson: data length differs from operator rows");
  std::vector<double> term(mu.size());
  if (r) r->resize(mu.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(mu.size()); ++k) {
    const double m = mu[k];
    const double bk = b[k];
    term[k] = bk > 0.0 ? m - bk * std::log(std::max(m, floor)) : m;
    if (r) (*r)[k] = (bk > 0.0 && m > floor) ? 1.0 - bk / m : 1.0;
  }
  return deterministic_sum(term);
}

}  // namespace

Matrix assemble_image(std::span<const double> a, const Matrix& Y, const CharacteristicLibrary& library) {
  if (a.size() != library.size() || Y.cols != library.size())
    throw DimensionError("assemble_image: library size mismatch");
  Matrix F(Y.rows, library.m);
  for (std::size_t j = 0; j < library.size(); ++j) {
    const auto& e = library.entries[j];
    if (e.empty() || a[j] == 0.0) continue;
    const auto y = Y.col(j);
    for (std::size_t x = e.lo; x < e.hi; ++x) {
      auto f = F.col(x);
      for (std::size_t i = 0; i < Y.rows; ++i) f[i] += a[j] * y[i];
    }
  }
  return F;
}

BsrProblem::BsrProblem(const BraggOperator& A, const CharacteristicLibrary& library,
                       std::span<const double> b, ReconParams params)
    : A_(A), lib_(library), b_(b), params_(params), G_(gram(library)) {
  params_.validate();
  if (b.size() != A.rows()) throw DimensionError("BsrProblem: data length differs from operator rows");
  if (library.m != A.grid().m()) throw DimensionError("BsrProblem: library and operator grids differ");
  check_finite(b, "BsrProblem");
}

double BsrProblem::poisson(std::span<const double> mu) const {
  return poisson_nll(mu, b_, params_.log_floor, nullptr);
}

double BsrProblem::evaluate(std::span<const double> a, const Matrix& Y, Matrix* grad_y,
                            std::span<double> grad_a) const {
  const std::size_t L = l();
  const std::size_t N = n();
  if (a.size() != L || Y.rows != N || Y.cols != L) throw DimensionError("BsrProblem: argument shape mismatch");
  if (!grad_a.empty() && grad_a.size() != L) throw DimensionError("BsrProblem: gradient length mismatch");
  check_finite(a, "BsrProblem");
  check_finite(Y.data, "BsrProblem");

  const Matrix F = assemble_image(a, Y, lib_);
  const std::vector<double> mu = A_.apply(F.data);
  const bool need_grad = grad_y != nullptr || !grad_a.empty();
  std::vector<double> r;
  double value = poisson_nll(mu, b_, params_.log_floor, need_grad ? &r : nullptr);

  double l1 = 0.0;
  for (double v : Y.data) l1 += v;
  double mb = 0.0;
  for (double v : a) mb += v * (1.0 - v);
  double overlap = 0.0;
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t i = 0; i < j; ++i)
      if (G_(i, j) != 0.0) overlap += G_(i, j) * a[i] * a[j];
  value += params_.lambda * l1 + params_.alpha * mb + params_.gamma * overlap;
  if (!need_grad) return value;

  Matrix Gr(N, lib_.m);
  A_.apply_transpose(r, Gr.data);
  if (grad_y) *grad_y = Matrix(N, L);
  std::vector<double> S(N);
  for (std::size_t j = 0; j < L; ++j) {
    std::fill(S.begin(), S.end(), 0.0);
    const auto& e = lib_.entries[j];
    for (std::size_t x = e.lo; x < e.hi; ++x) {
      const auto g = Gr.col(x);
      for (std::size_t i = 0; i < N; ++i) S[i] += g[i];
    }
    if (grad_y) {
      auto gy = grad_y->col(j);
      for (std::size_t i = 0; i < N; ++i) gy[i] = a[j] * S[i] + params_.lambda;
    }
    if (!grad_a.empty()) {
      const auto y = Y.col(j);
      double d = 0.0;
      for (std::size_t i = 0; i < N; ++i) d += y[i] * S[i];
      double coupling = 0.0;
      for (std::size_t i = 0; i < L; ++i)
        if (i != j && G_(i, j) != 0.0) coupling += G_(i, j) * a[i];
      grad_a[j] = d + params_.alpha * (1.0 - 2.0 * a[j]) + params_.gamma * coupling;
    }
  }
  return value;
}

double objective_total(std::span<const double> a, const Matrix& Y, const BraggOperator& A,
                       const CharacteristicLibrary& library, std::span<const double> b,
                       const ReconParams& params) {
  return BsrProblem(A, library, b, params).evaluate(a, Y, nullptr);
}

Matrix grad_y(std::span<const double> a, const Matrix& Y, const BraggOperator& A,
              const CharacteristicLibrary& library, std::span<const double> b, const ReconParams& params) {
  Matrix g;
  BsrProblem(A, library, b, params).evaluate(a, Y, &g);
  return g;
}

std::vector<double> grad_a(std::span<const double> a, const Matrix& Y, const BraggOperator& A,
                           const CharacteristicLibrary& library, std::span<const double> b,
                           const ReconParams& params) {
  std::vector<double> g(library.size());
  BsrProblem(A, library, b, params).evaluate(a, Y, nullptr, g);
  return g;
}

double count_matched_level(const BraggOperator& A, std::span<const double> pattern,
                           std::span<const double> b) {
  const double total_b = deterministic_sum(b);
  const double total_model = deterministic_sum(A.apply(pattern));
  if (!(total_model > 0.0)) return 0.0;
  return total_b / total_model;
}

namespace {

BoxLbfgsOptions inner_options(const ReconParams& p, int iters) {
  BoxLbfgsOptions o;
  o.max_iters = iters;
  o.memory = p.memory;
  o.rel_f_tol = p.rel_f_tol;
  return o;
}

Matrix optimise_y(const BsrProblem& prob, std::span<const double> a, Matrix Y, int iters) {
  const std::size_t N = Y.rows;
  const std::size_t L = Y.cols;
  Matrix work(N, L);
  Matrix g;
  auto f = [&](std::span<const double> x, std::span<double> grad) {
    std::copy(x.begin(), x.end(), work.data.begin());
    const double v = prob.evaluate(a, work, &g);
    std::copy(g.data.begin(), g.data.end(), grad.begin());
    return v;
  };
  auto res = box_lbfgs(f, Y.data, 0.0, std::numeric_limits<double>::infinity(),
                       inner_options(prob.params(), iters));
  Y.data = std::move(res.x);
  return Y;
}

std::vector<double> optimise_a(const BsrProblem& prob, std::vector<double> a, const Matrix& Y, int iters) {
  auto f = [&](std::span<const double> x, std::span<double> grad) { return prob.evaluate(x, Y, nullptr, grad); };
  auto res = box_lbfgs(f, std::move(a), 0.0, 1.0, inner_options(prob.params(), iters));
  return std::move(res.x);
}

ReconResult alternate(const BsrProblem& prob, const CharacteristicLibrary& library, std::vector<double> a,
                      Matrix Y, int stage, int first_iter) {
  const auto& p = prob.params();
  ReconResult out;
  out.stage = stage;
  out.lambda = p.lambda;
  double C = prob.evaluate(a, Y, nullptr);
  out.trace.push_back({first_iter, C, stage});
  for (int k = 1; k <= p.n1; ++k) {
    Y = optimise_y(prob, a, std::move(Y), p.n2);
    a = optimise_a(prob, std::move(a), Y, p.n2);
    const double C_new = prob.evaluate(a, Y, nullptr);
    out.trace.push_back({first_iter + k, C_new, stage});
    const bool stalled = std::abs(C - C_new) <= p.rel_f_tol * std::max(std::abs(C), std::abs(C_new));
    C = C_new;
    if (stalled) break;
  }
  out.image = assemble_image(a, Y, library);
  out.a = std::move(a);
  out.Y = std::move(Y);
  return out;
}

// Outer iterations with gamma and alpha raised by equal log steps; the last one
// reaches the target weights.
void warm_up(const BraggOperator& A, const CharacteristicLibrary& library, std::span<const double> b,
             const ReconParams& params, std::vector<double>& a, Matrix& Y) {
  const int K = params.warmup;
  for (int k = 0; k < K; ++k) {
    const double t = K > 1 ? static_cast<double>(K - 1 - k) / (K - 1) : 0.0;
    ReconParams q = params;
    q.gamma = params.gamma * std::pow(10.0, -params.warmup_gamma_decades * t);
    q.alpha = params.alpha * std::pow(10.0, -params.warmup_alpha_decades * t);
    const BsrProblem prob(A, library, b, q);
    Y = optimise_y(prob, a, std::move(Y), q.n2);
    a = optimise_a(prob, std::move(a), Y, q.n2);
  }
}

void check_data(const Sinogram& b, const BraggOperator& A) {
  b.validate();
  if (b.row_index != A.row_index()) throw DimensionError("sinogram rows do not match the operator");
}

}  // namespace

Matrix solve_spectra(const BsrProblem& problem, std::span<const double> a, Matrix Y0, int iters) {
  return optimise_y(problem, a, std::move(Y0), iters);
}

ReconResult run_2dbsr(const Sinogram& b, const CharacteristicLibrary& library, const BraggOperator& A,
                      const ReconParams& params) {
  params.validate();
  std::vector<double> a0(library.size(), params.a0);
  double level = params.y0;
  if (!(level > 0.0)) {
    const Matrix pattern = assemble_image(a0, Matrix(A.grid().n(), library.size(), 1.0), library);
    level = count_matched_level(A, pattern.data, b.values);
  }
  return run_2dbsr(b, library, A, params, std::move(a0), Matrix(A.grid().n(), library.size(), level));
}

ReconResult run_2dbsr(const Sinogram& b, const CharacteristicLibrary& library, const BraggOperator& A,
                      const ReconParams& params, std::vector<double> a0, Matrix Y0) {
  check_data(b, A);
  const BsrProblem prob(A, library, b.values, params);
  for (double v : a0)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("run_2dbsr: a0 outside [0, 1]");
  for (double v : Y0.data)
    if (!(v >= 0.0)) throw DomainError("run_2dbsr: Y0 must be nonnegative");
  warm_up(A, library, b.values, params, a0, Y0);
  return alternate(prob, library, std::move(a0), std::move(Y0), 1, 0);
}

ReconResult run_two_stage(const Sinogram& b, const CharacteristicLibrary& library,
                          const BraggOperator& A, const ReconParams& params, ReconResult* stage1) {
  ReconResult first = run_2dbsr(b, library, A, params);
  ReconParams second_params = params;
  second_params.lambda = 10.0 * params.lambda;
  const BsrProblem prob(A, library, b.values, second_params);
  ReconResult second = alternate(prob, library, first.a, first.Y, 2, first.trace.back().iter);
  second.trace.insert(second.trace.begin(), first.trace.begin(), first.trace.end());
  if (stage1) *stage1 = std::move(first);
  return second;
}

double tv_smoothed(const Matrix& image, double beta) {
  Matrix unused(image.rows, image.cols);
  return tv_smoothed_grad(image, beta, unused);
}

double tv_smoothed_grad(const Matrix& Y, double beta, Matrix& grad) {
  if (!(beta > 0.0)) throw DomainError("tv_smoothed: beta must be positive");
  if (grad.rows != Y.rows || grad.cols != Y.cols) throw DimensionError("tv_smoothed: gradient shape mismatch");
  const double b2 = beta * beta;
  double total = 0.0;
  for (std::size_t j = 0; j < Y.cols; ++j)
    for (std::size_t i = 0; i < Y.rows; ++i) {
      const double dq = i + 1 < Y.rows ? Y(i + 1, j) - Y(i, j) : 0.0;
      const double dx = j + 1 < Y.cols ? Y(i, j + 1) - Y(i, j) : 0.0;
      const double t = std::sqrt(dq * dq + dx * dx + b2);
      total += t;
      if (i + 1 < Y.rows) grad(i + 1, j) += dq / t;
      if (j + 1 < Y.cols) grad(i, j + 1) += dx / t;
      grad(i, j) -= (dq + dx) / t;
    }
  return total;
}

double ftv_objective_grad(const Matrix& image, const BraggOperator& A, std::span<const double> b,
                          double lambda, double beta, double log_floor, Matrix* grad) {
  if (image.rows != A.grid().n() || image.cols != A.grid().m())
    throw DimensionError("ftv_objective_grad: image shape differs from the operator grid");
  check_finite(image.data, "ftv_objective_grad");
  const std::vector<double> mu = A.apply(image.data);
  std::vector<double> r;
  double value = poisson_nll(mu, b, log_floor, grad ? &r : nullptr);
  Matrix tv_grad(image.rows, image.cols);
  value += lambda * tv_smoothed_grad(image, beta, tv_grad);
  if (grad) {
    *grad = Matrix(image.rows, image.cols);
    A.apply_transpose(r, grad->data);
    for (std::size_t k = 0; k < grad->data.size(); ++k) grad->data[k] += lambda * tv_grad.data[k];
  }
  return value;
}

ReconResult run_ftv(const Sinogram& b, const BraggOperator& A, const ReconParams& params) {
  params.validate();
  double level = params.y0;
  if (!(level > 0.0)) {
    const std::vector<double> ones(A.cols(), 1.0);
    level = count_matched_level(A, ones, b.values);
  }
  return run_ftv(b, A, params, Matrix(A.grid().n(), A.grid().m(), level));
}

ReconResult run_ftv(const Sinogram& b, const BraggOperator& A, const ReconParams& params, Matrix y0) {
  params.validate();
  check_data(b, A);
  if (y0.rows != A.grid().n() || y0.cols != A.grid().m()) throw DimensionError("run_ftv: y0 shape mismatch");
  ReconResult out;
  out.method = "ftv";
  out.lambda = params.lambda;
  Matrix work(y0.rows, y0.cols);
  Matrix g;
  auto f = [&](std::span<const double> x, std::span<double> grad) {
    std::copy(x.begin(), x.end(), work.data.begin());
    const double v = ftv_objective_grad(work, A, b.values, params.lambda, params.tv_beta, params.log_floor, &g);
    std::copy(g.data.begin(), g.data.end(), grad.begin());
    return v;
  };
  work.data = y0.data;
  out.trace.push_back({0, ftv_objective_grad(work, A, b.values, params.lambda, params.tv_beta,
                                             params.log_floor, nullptr), 1});
  BoxLbfgsOptions o = inner_options(params, params.ftv_iters);
  o.on_iteration = [&](int it, double v) { out.trace.push_back({it, v, 1}); };
  auto res = box_lbfgs(f, std::move(y0.data), 0.0, std::numeric_limits<double>::infinity(), o);
  out.image = Matrix(work.rows, work.cols);
  out.image.data = std::move(res.x);
  return out;
}

}  // namespace bst
