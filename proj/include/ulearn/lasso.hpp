#pragma once

#include <vector>

#include "ulearn/core_types.hpp"
#include "ulearn/engine.hpp"

namespace ulearn {

/// Constrained least squares estimate: min ||y - b0 - X beta||^2 s.t. ||beta||_1 <= K.
struct LassoFit {
  double intercept = 0.0;
  Vector coefficients;
  double K = 0.0;
  int train_rows = 0;
  /// ||y - b0 - X beta||_2^2 at the returned point.
  double objective = 0.0;
  /// Step 1/L used by the solver on the centered, 1/(2m)-scaled problem.
  double step = 0.0;
  int iterations = 0;
};

struct LassoOptions {
  double tol = 1e-8;
  int max_iter = 50000;
  /// z-score features with training statistics before fitting.
  bool standardize = false;
};

/// Euclidean projection onto {||x||_1 <= K} by sort and threshold.
Vector project_l1(const Vector& v, double K);

/// Solves the constrained problem by accelerated projected gradient with
/// adaptive restart on the centered data; the intercept is recovered exactly.
/// `warm_start`, if non-empty, seeds the iterate (it is projected first).
/// Throws FitFailure when max_iter is exhausted.
LassoFit lasso_fit(const Matrix& X, const Vector& y, double K, double tol = 1e-8,
                   int max_iter = 50000, const Vector& warm_start = Vector());

/// ||y - b0 - X beta||_2^2.
double lasso_objective(const Matrix& X, const Vector& y, double intercept, const Vector& beta);

/// ||beta - P_K(beta - step * grad)||_inf for the centered 1/(2m)-scaled problem.
double lasso_fixed_point_residual(const Matrix& X, const Vector& y, const Vector& beta,
                                  double K, double step);

/// 20 log-spaced values between 0.01x and 10x the l1 norm of a lightly
/// penalized ridge fit.
std::vector<double> default_K_grid(const Dataset& data, int points = 20);

/// K from `grid` with the smallest mean held-out squared error over `folds`
/// folds; ties go to the smaller K.
double select_K_cv(const Dataset& data, int folds, std::vector<double> grid,
                   const SeedSpec& seed, double tol = 1e-6, int max_iter = 50000);

/// Lasso base learner with a fixed constraint K. Ignores the validation set.
class LassoLearner final : public BaseLearner {
 public:
  explicit LassoLearner(double K, LassoOptions options = {}, Vector warm_start = Vector());

  std::unique_ptr<FittedPredictor> fit(const Dataset& train, const Dataset& valid,
                                       std::uint64_t seed) const override;
  bool uses_validation() const override { return false; }

  /// Fit returning the raw LassoFit (coefficients on the original feature scale).
  LassoFit fit_coefficients(const Dataset& train) const;

  double K() const { return K_; }

 private:
  double K_;
  LassoOptions options_;
  Vector warm_start_;
};

}  // namespace ulearn
