#pragma once

#include <span>
#include <string>
#include <vector>

#include "bst/matrix.hpp"
#include "bst/operator.hpp"
#include "bst/optimize.hpp"
#include "bst/sinogram.hpp"

namespace bst {

struct ReconParams {
  double lambda = 1.0;     ///< L1 weight on the spectra (TV weight for FTV)
  double alpha = 1e6;      ///< multibang weight
  double gamma = 1e10;     ///< overlap weight
  int n1 = 20;             ///< outer iterations
  int n2 = 50;             ///< inner quasi-Newton iterations per stage
  double log_floor = 1e-12;
  double tv_beta = 1e-3;   ///< FTV smoothing
  int ftv_iters = 1000;
  int memory = 10;
  double rel_f_tol = 1e-9;
  double a0 = 0.5;
  /// Uniform starting spectra; <= 0 picks the value whose forward data match sum(b).
  double y0 = 0.0;
  /// Outer iterations run before the traced ones with gamma and alpha ramped
  /// geometrically up to their targets; 0 starts at full weight.
  int warmup = 8;
  double warmup_gamma_decades = 8.0;
  double warmup_alpha_decades = 4.0;

  void validate() const;
};

struct TracePoint {
  int iter = 0;
  double objective = 0.0;
  int stage = 1;
};

struct ReconResult {
  std::vector<double> a;       ///< l activations in [0, 1]
  Matrix Y;                    ///< n x l spectra
  Matrix image;                ///< n x m assembled image
  std::vector<TracePoint> trace;
  int stage = 1;
  double lambda = 0.0;
  std::string method = "2dbsr";

  /// Indices with a_j > 0.5.
  std::vector<std::size_t> active_set() const;
};

/// Sum_j a_j y_j chi_j as an n x m image.
Matrix assemble_image(std::span<const double> a, const Matrix& Y, const CharacteristicLibrary& library);

/// Evaluates the 2DBSR functional and its partial gradients for one data set.
class BsrProblem {
 public:
  BsrProblem(const BraggOperator& A, const CharacteristicLibrary& library, std::span<const double> b,
             ReconParams params);

  const ReconParams& params() const { return params_; }
  ReconParams& params() { return params_; }
  const Matrix& gram_matrix() const { return G_; }
  std::size_t n() const { return A_.grid().n(); }
  std::size_t l() const { return lib_.size(); }

  /// Full objective. Either gradient pointer may be null.
  double evaluate(std::span<const double> a, const Matrix& Y, Matrix* grad_y,
                  std::span<double> grad_a = {}) const;

  /// Poisson negative log-likelihood of the model mean mu, with the log floor.
  double poisson(std::span<const double> mu) const;

 private:
  const BraggOperator& A_;
  const CharacteristicLibrary& lib_;
  std::span<const double> b_;
  ReconParams params_;
  Matrix G_;
};

double objective_total(std::span<const double> a, const Matrix& Y, const BraggOperator& A,
                       const CharacteristicLibrary& library, std::span<const double> b,
                       const ReconParams& params);
Matrix grad_y(std::span<const double> a, const Matrix& Y, const BraggOperator& A,
              const CharacteristicLibrary& library, std::span<const double> b, const ReconParams& params);
std::vector<double> grad_a(std::span<const double> a, const Matrix& Y, const BraggOperator& A,
                           const CharacteristicLibrary& library, std::span<const double> b,
                           const ReconParams& params);

/// Alternating minimisation: Y with a fixed, then a with Y fixed, n1 times,
/// after the warm-up. The trace starts at the first full-weight iterate.
ReconResult run_2dbsr(const Sinogram& b, const CharacteristicLibrary& library, const BraggOperator& A,
                      const ReconParams& params);
ReconResult run_2dbsr(const Sinogram& b, const CharacteristicLibrary& library, const BraggOperator& A,
                      const ReconParams& params, std::vector<double> a0, Matrix Y0);

/// run_2dbsr at lambda, then again from that result at 10 lambda. The returned
/// trace holds both stages; `stage1` receives the first pass when given.
ReconResult run_two_stage(const Sinogram& b, const CharacteristicLibrary& library,
                          const BraggOperator& A, const ReconParams& params, ReconResult* stage1 = nullptr);

/// Inner solve for a fixed activation vector; used by the exhaustive check.
Matrix solve_spectra(const BsrProblem& problem, std::span<const double> a, Matrix Y0, int iters);

// FTV baseline.

/// Sum over pixels of sqrt(dq^2 + dx^2 + beta^2), forward differences, replicate boundary.
double tv_smoothed(const Matrix& image, double beta);
/// Adds d TV / d image into grad.
double tv_smoothed_grad(const Matrix& image, double beta, Matrix& grad);

/// Poisson term of A y plus lambda * TV_beta(y).
double ftv_objective_grad(const Matrix& image, const BraggOperator& A, std::span<const double> b,
                          double lambda, double beta, double log_floor, Matrix* grad);

ReconResult run_ftv(const Sinogram& b, const BraggOperator& A, const ReconParams& params);
ReconResult run_ftv(const Sinogram& b, const BraggOperator& A, const ReconParams& params, Matrix y0);

/// Uniform image value c such that sum(A (c * pattern)) equals sum(b).
double count_matched_level(const BraggOperator& A, std::span<const double> pattern,
                           std::span<const double> b);

}  // namespace bst
