#pragma once

#include <optional>
#include <vector>

#include "ulearn/core_types.hpp"
#include "ulearn/engine.hpp"

namespace ulearn {

// ---------------------------------------------------------------- conformal

enum class ConformityTarget { observed_y, true_f0 };

struct ConformalConfig {
  double alpha = 0.1;
  /// Fraction of the training rows used for the proper-training split.
  double split_fraction = 0.5;
  ConformityTarget conformity_target = ConformityTarget::observed_y;
  /// Share of the proper-training split held out for early stopping when the
  /// learner uses a validation set.
  double validation_fraction = 0.2;

  void validate() const;
};

struct ConformalInterval {
  double prediction = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct ConformalResult {
  std::vector<ConformalInterval> intervals;
  double q_hat = 0.0;
  int calibration_size = 0;
};

/// ceil((m + 1)(1 - alpha))-th smallest of m scores (1-based rank).
double conformal_quantile(std::vector<double> scores, double alpha);

/// Split conformal intervals. `truth` holds f0 at every training row and is
/// required iff the conformity target is true_f0.
ConformalResult split_conformal(const Dataset& train, const Matrix& test_features,
                                const BaseLearner& learner, const ConformalConfig& cfg,
                                const std::optional<Vector>& truth, std::uint64_t seed);

// ---------------------------------------------------------------- bootstrap

/// B resamples of size n drawn with replacement.
struct ResamplePlan {
  int n = 0;
  std::vector<std::vector<int>> draws;  // each of length n, sorted, with repeats
  Matrix counts;                        // B x n multiplicities

  int B() const { return static_cast<int>(draws.size()); }
};

ResamplePlan make_resample_plan(int n, int B, const SeedSpec& seed);

struct SwrResult {
  ResamplePlan plan;
  Matrix predictions;  // B x l
};

/// Bootstrap ensemble: fits on each resample (validation = out-of-bag rows).
SwrResult swr_ensemble(const Dataset& data, const BaseLearner& learner, int B,
                       const Matrix& test_features, const SeedSpec& seed, int workers = 1);

/// Ensemble mean and IJ interval for a bootstrap ensemble. Membership uses
/// multiplicities unless `indicator_membership` is set; sum_i Cov_i^2 is not
/// rescaled.
std::vector<PredictionInference> swr_infer(const SwrResult& result, double alpha,
                                           bool indicator_membership = false,
                                           IjOptions opts = {});

/// Full-data prediction with the standard deviation of B bootstrap refits as SE.
std::vector<PredictionInference> naive_bootstrap(const Dataset& data, const BaseLearner& learner,
                                                 int B, double alpha,
                                                 const Matrix& test_features,
                                                 const SeedSpec& seed, int workers = 1);

// ---------------------------------------------------------------- oracle

/// OLS with intercept on a fixed subset of columns.
class OlsLearner final : public BaseLearner {
 public:
  explicit OlsLearner(std::vector<int> support);

  std::unique_ptr<FittedPredictor> fit(const Dataset& train, const Dataset& valid,
                                       std::uint64_t seed) const override;
  bool uses_validation() const override { return false; }

 private:
  std::vector<int> support_;
};

/// The CMS/IJ pipeline with OLS on the true support as the base learner.
std::vector<PredictionInference> oracle_ols(const Dataset& data, const std::vector<int>& support,
                                            const SubsamplePlan& plan,
                                            const Matrix& test_features, double alpha,
                                            const SeedSpec& seed, int workers = 1);

/// Fits on the whole of `data`. Learners that use a validation set get a
/// random `holdout` share of the rows for it.
std::unique_ptr<FittedPredictor> fit_with_holdout(const BaseLearner& learner, const Dataset& data,
                                                  double holdout, std::uint64_t seed);

}  // namespace ulearn
