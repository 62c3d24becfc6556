#include "ulearn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ulearn/normal.hpp"
#include "ulearn/parallel.hpp"

namespace ulearn {

namespace {

std::string describe(const std::exception_ptr& p) {
  try {
    std::rethrow_exception(p);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

std::vector<int> shuffled_rows(int n, std::uint64_t seed) {
  std::vector<int> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  return rows;
}

Dataset empty_like(const Dataset& data) { return Dataset(Matrix(0, data.p()), Vector(0)); }

}  // namespace

std::unique_ptr<FittedPredictor> fit_with_holdout(const BaseLearner& learner, const Dataset& data,
                                                  double holdout, std::uint64_t seed) {
  if (!learner.uses_validation()) return learner.fit(data, empty_like(data), seed);
  const int n = static_cast<int>(data.n());
  const int held = std::clamp(static_cast<int>(std::ceil(holdout * n)), 1, n - 1);
  std::vector<int> rows = shuffled_rows(n, seed ^ 0x5851F42D4C957F2DULL);
  std::vector<int> valid_rows(rows.begin(), rows.begin() + held);
  std::vector<int> train_rows(rows.begin() + held, rows.end());
  std::sort(valid_rows.begin(), valid_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return learner.fit(data.subset(train_rows), data.subset(valid_rows), seed);
}

// ---------------------------------------------------------------- conformal

void ConformalConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConfig("conformal: alpha must lie in (0, 1)");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw InvalidConfig("conformal: split fraction must lie in (0, 1)");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw InvalidConfig("conformal: validation fraction must lie in (0, 1)");
  }
}

double conformal_quantile(std::vector<double> scores, double alpha) {
  if (scores.empty()) throw InvalidConfig("conformal_quantile: no scores");
  const double m = static_cast<double>(scores.size());
  // Guard against (m + 1)(1 - alpha) landing a hair above an integer.
  const auto rank = static_cast<std::size_t>(std::ceil((m + 1.0) * (1.0 - alpha) - 1e-9));
  if (rank < 1 || rank > scores.size()) {
    throw InvalidConfig("conformal_quantile: calibration set too small for alpha");
  }
  std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   scores.end());
  return scores[rank - 1];
}

ConformalResult split_conformal(const Dataset& train, const Matrix& test_features,
                                const BaseLearner& learner, const ConformalConfig& cfg,
                                const std::optional<Vector>& truth, std::uint64_t seed) {
  cfg.validate();
  const bool use_truth = cfg.conformity_target == ConformityTarget::true_f0;
  if (use_truth != truth.has_value()) {
    throw InvalidConfig("split_conformal: truth vector is required iff the target is true_f0");
  }
  if (truth && truth->size() != train.n()) {
    throw InvalidConfig("split_conformal: truth length must equal training rows");
  }
  const int n = static_cast<int>(train.n());
  const int proper = static_cast<int>(std::floor(cfg.split_fraction * n));
  const int calibration = n - proper;
  const int needed = static_cast<int>(std::ceil(1.0 / cfg.alpha - 1e-9));
  if (proper < 1 || calibration < needed) {
    throw InvalidConfig("split_conformal: calibration split has " + std::to_string(calibration) +
                        " points, need at least " + std::to_string(needed));
  }

  const std::vector<int> rows = shuffled_rows(n, seed);
  std::vector<int> proper_rows(rows.begin(), rows.begin() + proper);
  std::vector<int> calib_rows(rows.begin() + proper, rows.end());
  std::sort(proper_rows.begin(), proper_rows.end());
  std::sort(calib_rows.begin(), calib_rows.end());

  const auto fitted =
      fit_with_holdout(learner, train.subset(proper_rows), cfg.validation_fraction, seed);

  const Dataset calib = train.subset(calib_rows);
  const Vector calib_pred = fitted->predict(calib.features());
  std::vector<double> scores(calib_rows.size());
  for (std::size_t k = 0; k < calib_rows.size(); ++k) {
    const double target = use_truth ? (*truth)(calib_rows[k]) : calib.responses()(static_cast<Index>(k));
    scores[k] = std::abs(target - calib_pred(static_cast<Index>(k)));
  }

  ConformalResult result;
  result.q_hat = conformal_quantile(std::move(scores), cfg.alpha);
  result.calibration_size = calibration;
  const Vector test_pred = fitted->predict(test_features);
  result.intervals.reserve(static_cast<std::size_t>(test_pred.size()));
  for (Index t = 0; t < test_pred.size(); ++t) {
    result.intervals.push_back(
        {test_pred(t), test_pred(t) - result.q_hat, test_pred(t) + result.q_hat});
  }
  return result;
}

// ---------------------------------------------------------------- bootstrap

ResamplePlan make_resample_plan(int n, int B, const SeedSpec& seed) {
  if (n < 1) throw InvalidConfig("make_resample_plan: n must be positive");
  if (B < 1) throw InvalidConfig("make_resample_plan: B must be positive");
  ResamplePlan plan;
  plan.n = n;
  plan.counts = Matrix::Zero(B, n);
  plan.draws.resize(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::uniform_int_distribution<int> pick(0, n - 1);
    auto& draw = plan.draws[static_cast<std::size_t>(b)];
    draw.resize(static_cast<std::size_t>(n));
    for (int& i : draw) {
      i = pick(rng);
      plan.counts(b, i) += 1.0;
    }
    std::sort(draw.begin(), draw.end());
  }
  return plan;
}

SwrResult swr_ensemble(const Dataset& data, const BaseLearner& learner, int B,
                       const Matrix& test_features, const SeedSpec& seed, int workers) {
  if (B < 2) throw InvalidConfig("swr_ensemble: B must be at least 2");
  if (test_features.cols() != data.p()) {
    throw InvalidConfig("swr_ensemble: test feature columns do not match p");
  }
  SwrResult result;
  result.plan = make_resample_plan(static_cast<int>(data.n()), B, seed);
  result.predictions.resize(B, test_features.rows());
  const SeedSpec fit_seeds = child_stream(seed, 1);
  try {
    parallel_for(static_cast<std::size_t>(B), workers, [&](std::size_t task) {
      const int b = static_cast<int>(task);
      const auto& draw = result.plan.draws[task];
      const Dataset train = data.subset(draw);
      Dataset valid = empty_like(data);
      if (learner.uses_validation()) {
        std::vector<int> oob;
        for (int i = 0; i < result.plan.n; ++i) {
          if (result.plan.counts(b, i) == 0.0) oob.push_back(i);
        }
        // A resample containing every row leaves no out-of-bag rows.
        valid = oob.empty() ? train : data.subset(oob);
      }
      const auto fitted = learner.fit(train, valid, derive_seed(fit_seeds, task));
      result.predictions.row(b) = fitted->predict(test_features).transpose();
    });
  } catch (const TaskFailure& f) {
    throw FitFailure("fit failed on resample " + std::to_string(f.index()) + ": " +
                     describe(f.inner()));
  }
  require_finite(result.predictions, "swr_ensemble predictions");
  return result;
}

std::vector<PredictionInference> swr_infer(const SwrResult& result, double alpha,
                                           bool indicator_membership, IjOptions opts) {
  const Matrix membership = indicator_membership
                                ? Matrix((result.plan.counts.array() > 0.0).cast<double>())
                                : result.plan.counts;
  const Vector var = ij_variance_weighted(membership, result.predictions, 1.0, opts);
  const Vector mean = result.predictions.colwise().mean().transpose();
  std::vector<PredictionInference> out;
  out.reserve(static_cast<std::size_t>(mean.size()));
  for (Index t = 0; t < mean.size(); ++t) {
    out.push_back(PredictionInference::make(mean(t), std::sqrt(var(t)), alpha));
  }
  return out;
}

std::vector<PredictionInference> naive_bootstrap(const Dataset& data, const BaseLearner& learner,
                                                 int B, double alpha,
                                                 const Matrix& test_features,
                                                 const SeedSpec& seed, int workers) {
  if (B < 2) throw InvalidConfig("naive_bootstrap: B must be at least 2");
  const auto full = fit_with_holdout(learner, data, 0.2, derive_seed(child_stream(seed, 2), 0));
  const Vector point = full->predict(test_features);
  const SwrResult boot = swr_ensemble(data, learner, B, test_features, seed, workers);

  const Matrix centered = boot.predictions.rowwise() - boot.predictions.colwise().mean();
  const Vector se =
      (centered.colwise().squaredNorm() / static_cast<double>(B - 1)).cwiseSqrt().transpose();
  std::vector<PredictionInference> out;
  out.reserve(static_cast<std::size_t>(point.size()));
  for (Index t = 0; t < point.size(); ++t) {
    out.push_back(PredictionInference::make(point(t), se(t), alpha));
  }
  return out;
}

// ---------------------------------------------------------------- oracle

namespace {

class OlsPredictor final : public FittedPredictor {
 public:
  OlsPredictor(std::vector<int> support, double intercept, Vector coef, Index p)
      : support_(std::move(support)), intercept_(intercept), coef_(std::move(coef)), p_(p) {}

  Vector predict(const Matrix& rows) const override {
    if (rows.cols() != p_) throw InvalidConfig("OlsPredictor: feature count mismatch");
    Vector out = Vector::Constant(rows.rows(), intercept_);
    for (std::size_t k = 0; k < support_.size(); ++k) {
      out += coef_(static_cast<Index>(k)) * rows.col(support_[k]);
    }
    return out;
  }

 private:
  std::vector<int> support_;
  double intercept_;
  Vector coef_;
  Index p_;
};

}  // namespace

OlsLearner::OlsLearner(std::vector<int> support) : support_(std::move(support)) {
  std::sort(support_.begin(), support_.end());
  if (std::adjacent_find(support_.begin(), support_.end()) != support_.end()) {
    throw InvalidConfig("OlsLearner: duplicate support index");
  }
}

std::unique_ptr<FittedPredictor> OlsLearner::fit(const Dataset& train, const Dataset&,
                                                 std::uint64_t) const {
  const Index m = train.n();
  const Index k = static_cast<Index>(support_.size());
  for (int j : support_) {
    if (j < 0 || j >= train.p()) throw InvalidConfig("OlsLearner: support index out of range");
  }
  Matrix design(m, k + 1);
  design.col(0).setOnes();
  for (Index c = 0; c < k; ++c) design.col(c + 1) = train.features().col(support_[c]);

  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < k + 1) {
    throw FitFailure("OlsLearner: singular design (rank " + std::to_string(qr.rank()) + " < " +
                     std::to_string(k + 1) + ")");
  }
  const Vector sol = qr.solve(train.responses());
  return std::make_unique<OlsPredictor>(support_, sol(0), sol.tail(k), train.p());
}

std::vector<PredictionInference> oracle_ols(const Dataset& data, const std::vector<int>& support,
                                            const SubsamplePlan& plan,
                                            const Matrix& test_features, double alpha,
                                            const SeedSpec& seed, int workers) {
  if (static_cast<int>(support.size()) >= plan.r()) {
    throw InvalidConfig("oracle_ols: support size must be smaller than r");
  }
  const OlsLearner learner(support);
  return infer(ensemble_fit_predict(data, learner, plan, test_features, seed, workers), alpha);
}

}  // namespace ulearn
