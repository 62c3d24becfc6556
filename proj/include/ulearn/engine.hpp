#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "ulearn/core_types.hpp"

namespace ulearn {

/// A fitted model. predict() must be pure.
class FittedPredictor {
 public:
  virtual ~FittedPredictor() = default;
  /// One prediction per row of `rows`.
  virtual Vector predict(const Matrix& rows) const = 0;
};

/// Fit-then-predict contract shared by every base learner. fit() must be
/// deterministic given (train, valid, seed) and must not mutate the learner.
class BaseLearner {
 public:
  virtual ~BaseLearner() = default;
  virtual std::unique_ptr<FittedPredictor> fit(const Dataset& train, const Dataset& valid,
                                               std::uint64_t seed) const = 0;
  /// When false the engine passes an empty validation set.
  virtual bool uses_validation() const { return true; }
};

/// Subsample size is given either as n^gamma or explicitly.
struct UlearnConfig {
  std::optional<double> gamma;
  std::optional<int> r;
  int B = 500;
  double alpha = 0.05;
  bool oob = false;

  /// Resolves r for a training set of size n, validating the invariants.
  int resolve_r(int n) const;
};

struct IjOptions {
  /// Subtract the Monte-Carlo noise term that finite B adds to the IJ estimate.
  bool mc_correction = false;
};

/// floor(n^gamma) clamped to [1, n-1].
int compute_r(int n, double gamma);

/// B independent uniform draws of r distinct indices from [0, n).
SubsamplePlan make_plan(int n, int r, int B, const SeedSpec& seed);

/// Fits the learner on every index set (validation = complement) and predicts
/// every test row. Fit seeds are derive_seed(seed, b). Output is independent of
/// `workers`.
EnsembleResult ensemble_fit_predict(const Dataset& data, const BaseLearner& learner,
                                    const SubsamplePlan& plan, const Matrix& test_features,
                                    const SeedSpec& seed, int workers = 1);

double ensemble_mean(const EnsembleResult& result, Index test_index);

/// Infinitesimal-jackknife variance of the ensemble mean at one test point:
///   ((n-1)/n) (n/(n-r))^2 sum_i Cov_i^2,
///   Cov_i = (1/B) sum_b (J_bi - Jbar_i)(pred_b - mean).
double ij_variance(const EnsembleResult& result, Index test_index, IjOptions opts = {});

/// ij_variance for every test point at once.
Vector ij_variance_all(const EnsembleResult& result, IjOptions opts = {});

/// Same estimator on an arbitrary B x n membership (0/1 or multiplicities)
/// and a B x l prediction matrix; `scale` multiplies sum_i Cov_i^2.
Vector ij_variance_weighted(const Matrix& membership, const Matrix& predictions,
                            double scale, IjOptions opts = {});

/// Leading factor ((n-1)/n) (n/(n-r))^2.
double ij_scale(int n, int r);

/// Ensemble mean, IJ standard error and normal interval for every test point.
std::vector<PredictionInference> infer(const EnsembleResult& result, double alpha,
                                       IjOptions opts = {});

/// Out-of-bag inference for every training point: point i uses only the rows b
/// with J[b][i] = 0; Jbar is recomputed over that restricted row set while n
/// and r stay unchanged.
std::vector<PredictionInference> oob_predict(const Dataset& data, const BaseLearner& learner,
                                             const SubsamplePlan& plan, const SeedSpec& seed,
                                             double alpha, int workers = 1,
                                             IjOptions opts = {});

/// OOB inference from an already computed B x n matrix of predictions at the
/// training points.
std::vector<PredictionInference> oob_infer(const SubsamplePlan& plan,
                                           const Matrix& train_predictions, double alpha,
                                           IjOptions opts = {});

}  // namespace ulearn
