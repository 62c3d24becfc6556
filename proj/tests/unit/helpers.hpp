#pragma once

#include <memory>
#include <random>

#include "ulearn/engine.hpp"

namespace testutil {

using ulearn::Dataset;
using ulearn::Matrix;
using ulearn::Vector;

class ConstantPredictor final : public ulearn::FittedPredictor {
 public:
  explicit ConstantPredictor(double c) : c_(c) {}
  Vector predict(const Matrix& rows) const override { return Vector::Constant(rows.rows(), c_); }

 private:
  double c_;
};

/// Ignores the data and predicts a constant.
class ConstantLearner final : public ulearn::BaseLearner {
 public:
  explicit ConstantLearner(double c) : c_(c) {}
  std::unique_ptr<ulearn::FittedPredictor> fit(const Dataset&, const Dataset&,
                                               std::uint64_t) const override {
    return std::make_unique<ConstantPredictor>(c_);
  }
  bool uses_validation() const override { return false; }

 private:
  double c_;
};

/// Predicts the mean training response everywhere.
class MeanLearner final : public ulearn::BaseLearner {
 public:
  std::unique_ptr<ulearn::FittedPredictor> fit(const Dataset& train, const Dataset&,
                                               std::uint64_t) const override {
    return std::make_unique<ConstantPredictor>(train.responses().mean());
  }
  bool uses_validation() const override { return false; }
};

/// Throws when asked to fit a subsample containing row `bad`.
class FailingLearner final : public ulearn::BaseLearner {
 public:
  explicit FailingLearner(double bad_y) : bad_y_(bad_y) {}
  std::unique_ptr<ulearn::FittedPredictor> fit(const Dataset& train, const Dataset&,
                                               std::uint64_t) const override {
    for (Eigen::Index i = 0; i < train.n(); ++i) {
      if (train.responses()(i) == bad_y_) throw ulearn::FitFailure("poisoned row");
    }
    return std::make_unique<ConstantPredictor>(0.0);
  }
  bool uses_validation() const override { return false; }

 private:
  double bad_y_;
};

inline Dataset random_dataset(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix x(n, p);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = z(rng);
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = x.row(i).sum() + z(rng);
  return Dataset(x, y);
}

}  // namespace testutil
