#include "ulearn/engine.hpp"

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

Dataset empty_like(const Dataset& data) {
  return Dataset(Matrix(0, data.p()), Vector(0), data.feature_names());
}

}  // namespace

int UlearnConfig::resolve_r(int n) const {
  if (gamma.has_value() == r.has_value()) {
    throw InvalidConfig("exactly one of gamma or r must be set");
  }
  if (B < 1) throw InvalidConfig("B must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConfig("alpha must lie in (0, 1)");
  const int resolved = gamma ? compute_r(n, *gamma) : *r;
  if (resolved < 1 || resolved >= n) {
    throw InvalidConfig("subsample size r=" + std::to_string(resolved) +
                        " must satisfy 1 <= r < n=" + std::to_string(n));
  }
  return resolved;
}

int compute_r(int n, double gamma) {
  if (n < 2) throw InvalidConfig("compute_r: n must be at least 2");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidConfig("compute_r: gamma must lie in (0, 1]");
  // The guard keeps exact powers such as 100^0.5 from flooring to 9.
  const double raw = std::pow(static_cast<double>(n), gamma);
  const int r = static_cast<int>(std::floor(raw * (1.0 + 1e-12)));
  return std::clamp(r, 1, n - 1);
}

SubsamplePlan make_plan(int n, int r, int B, const SeedSpec& seed) {
  if (r < 1 || r >= n) {
    throw InvalidConfig("make_plan: need 1 <= r < n, got r=" + std::to_string(r) +
                        ", n=" + std::to_string(n));
  }
  if (B < 1) throw InvalidConfig("make_plan: B must be positive");

  std::vector<std::vector<int>> sets(static_cast<std::size_t>(B));
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int b = 0; b < B; ++b) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::iota(pool.begin(), pool.end(), 0);
    // Partial Fisher-Yates: the first r slots become a uniform r-subset.
    for (int k = 0; k < r; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    auto& set = sets[static_cast<std::size_t>(b)];
    set.assign(pool.begin(), pool.begin() + r);
    std::sort(set.begin(), set.end());
  }
  return SubsamplePlan(n, std::move(sets));
}

EnsembleResult ensemble_fit_predict(const Dataset& data, const BaseLearner& learner,
                                    const SubsamplePlan& plan, const Matrix& test_features,
                                    const SeedSpec& seed, int workers) {
  if (plan.n() != data.n()) {
    throw InvalidConfig("ensemble_fit_predict: plan.n does not match data rows");
  }
  if (test_features.cols() != data.p()) {
    throw InvalidConfig("ensemble_fit_predict: test feature columns do not match p");
  }
  Matrix predictions(plan.B(), test_features.rows());
  const bool want_valid = learner.uses_validation();

  try {
    parallel_for(static_cast<std::size_t>(plan.B()), workers, [&](std::size_t task) {
      const int b = static_cast<int>(task);
      const Dataset train = data.subset(plan.index_set(b));
      const Dataset valid = want_valid ? data.subset(plan.complement(b)) : empty_like(data);
      const auto fitted = learner.fit(train, valid, derive_seed(seed, task));
      const Vector row = fitted->predict(test_features);
      if (!row.allFinite()) throw FitFailure("non-finite prediction");
      predictions.row(b) = row.transpose();
    });
  } catch (const TaskFailure& f) {
    throw FitFailure("fit failed on subsample " + std::to_string(f.index()) + ": " +
                     describe(f.inner()));
  }
  return EnsembleResult(std::move(predictions), plan);
}

double ensemble_mean(const EnsembleResult& result, Index test_index) {
  if (test_index < 0 || test_index >= result.test_count()) {
    throw InvalidConfig("ensemble_mean: test index out of range");
  }
  return result.predictions().col(test_index).mean();
}

double ij_scale(int n, int r) {
  const double nd = n;
  const double ratio = nd / (nd - r);
  return (nd - 1.0) / nd * ratio * ratio;
}

Vector ij_variance_weighted(const Matrix& membership, const Matrix& predictions,
                            double scale, IjOptions opts) {
  const Index B = membership.rows();
  if (B < 2) throw InvalidConfig("IJ variance needs B >= 2");
  if (predictions.rows() != B) {
    throw InvalidConfig("IJ variance: membership and prediction row counts differ");
  }
  const double inv_b = 1.0 / static_cast<double>(B);

  const Matrix j_centered = membership.rowwise() - membership.colwise().mean();
  const Matrix y_centered = predictions.rowwise() - predictions.colwise().mean();
  // Cov is n x l: Cov(i, t) = (1/B) sum_b Jc(b, i) Yc(b, t).
  const Matrix cov = (j_centered.transpose() * y_centered) * inv_b;
  Vector var = scale * cov.colwise().squaredNorm().transpose();

  if (opts.mc_correction) {
    const double membership_var = j_centered.squaredNorm() * inv_b;
    const Vector pred_var = y_centered.colwise().squaredNorm().transpose() * inv_b;
    var -= scale * inv_b * membership_var * pred_var;
    var = var.cwiseMax(0.0);
  }
  return var;
}

double ij_variance(const EnsembleResult& result, Index test_index, IjOptions opts) {
  if (test_index < 0 || test_index >= result.test_count()) {
    throw InvalidConfig("ij_variance: test index out of range");
  }
  const auto& plan = result.plan();
  const Matrix column = result.predictions().col(test_index);
  return ij_variance_weighted(plan.membership_matrix(), column, ij_scale(plan.n(), plan.r()),
                              opts)(0);
}

Vector ij_variance_all(const EnsembleResult& result, IjOptions opts) {
  const auto& plan = result.plan();
  return ij_variance_weighted(plan.membership_matrix(), result.predictions(),
                              ij_scale(plan.n(), plan.r()), opts);
}

std::vector<PredictionInference> infer(const EnsembleResult& result, double alpha,
                                       IjOptions opts) {
  const Vector var = ij_variance_all(result, opts);
  const Vector mean = result.predictions().colwise().mean().transpose();
  std::vector<PredictionInference> out;
  out.reserve(static_cast<std::size_t>(result.test_count()));
  for (Index t = 0; t < result.test_count(); ++t) {
    out.push_back(PredictionInference::make(mean(t), std::sqrt(var(t)), alpha));
  }
  return out;
}

std::vector<PredictionInference> oob_infer(const SubsamplePlan& plan,
                                           const Matrix& train_predictions, double alpha,
                                           IjOptions opts) {
  const int n = plan.n();
  if (train_predictions.rows() != plan.B() || train_predictions.cols() != n) {
    throw InvalidConfig("oob_infer: predictions must be B x n");
  }
  std::vector<int> short_rows;
  std::vector<std::vector<int>> oob_rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < plan.B(); ++b) {
      if (!plan.member(b, i)) oob_rows[static_cast<std::size_t>(i)].push_back(b);
    }
    if (oob_rows[static_cast<std::size_t>(i)].size() < 2) short_rows.push_back(i);
  }
  if (!short_rows.empty()) {
    std::string list;
    for (std::size_t k = 0; k < short_rows.size() && k < 20; ++k) {
      list += (k ? "," : "") + std::to_string(short_rows[k]);
    }
    if (short_rows.size() > 20) list += ",...";
    throw InvalidConfig("oob_predict: " + std::to_string(short_rows.size()) +
                        " training points are excluded by fewer than 2 subsamples: " + list);
  }

  const Matrix full_membership = plan.membership_matrix();
  const double scale = ij_scale(n, plan.r());
  std::vector<PredictionInference> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& rows = oob_rows[static_cast<std::size_t>(i)];
    const Index m = static_cast<Index>(rows.size());
    Matrix membership(m, n);
    Matrix preds(m, 1);
    for (Index k = 0; k < m; ++k) {
      membership.row(k) = full_membership.row(rows[static_cast<std::size_t>(k)]);
      preds(k, 0) = train_predictions(rows[static_cast<std::size_t>(k)], i);
    }
    const double var = ij_variance_weighted(membership, preds, scale, opts)(0);
    out.push_back(PredictionInference::make(preds.mean(), std::sqrt(var), alpha));
  }
  return out;
}

std::vector<PredictionInference> oob_predict(const Dataset& data, const BaseLearner& learner,
                                             const SubsamplePlan& plan, const SeedSpec& seed,
                                             double alpha, int workers, IjOptions opts) {
  if (plan.n() != data.n()) throw InvalidConfig("oob_predict: plan.n does not match data rows");
  // Validate coverage before paying for any fits.
  for (int i = 0; i < plan.n(); ++i) {
    int excluded = 0;
    for (int b = 0; b < plan.B() && excluded < 2; ++b) excluded += plan.member(b, i) ? 0 : 1;
    if (excluded < 2) {
      return oob_infer(plan, Matrix::Zero(plan.B(), plan.n()), alpha, opts);  // throws
    }
  }
  const EnsembleResult fits =
      ensemble_fit_predict(data, learner, plan, data.features(), seed, workers);
  return oob_infer(plan, fits.predictions(), alpha, opts);
}

}  // namespace ulearn
