#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ulearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration or precondition was violated (r >= n, B < 2, bad shapes...).
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// Input data failed validation (non-finite values, malformed files).
class InvalidData : public Error {
 public:
  using Error::Error;
};

/// An iterative solver or optimizer failed to reach its target.
class FitFailure : public Error {
 public:
  using Error::Error;
};

/// Feature matrix (n x p) plus response vector (n). Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix features, Vector responses,
          std::vector<std::string> feature_names = {});

  const Matrix& features() const { return features_; }
  const Vector& responses() const { return responses_; }
  const std::vector<std::string>& feature_names() const { return names_; }

  Index n() const { return features_.rows(); }
  Index p() const { return features_.cols(); }

  /// Rows selected by `rows`, in the given order.
  Dataset subset(std::span<const int> rows) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  Matrix features_;
  Vector responses_;
  std::vector<std::string> names_;
};

/// Master seed plus a stream id; per-task seeds are derived from both.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// Pure mixing of (master, stream, index) into a 64-bit seed.
std::uint64_t derive_seed(const SeedSpec& spec, std::uint64_t subsample_index);

/// Child stream used to hand independent seed families to sub-tasks.
SeedSpec child_stream(const SeedSpec& spec, std::uint64_t tag);

/// B index sets of size r drawn from [0, n), plus the B x n membership matrix.
/// Duplicate sets across rows are allowed.
class SubsamplePlan {
 public:
  SubsamplePlan() = default;
  SubsamplePlan(int n, std::vector<std::vector<int>> index_sets);

  int n() const { return n_; }
  int r() const { return r_; }
  int B() const { return static_cast<int>(index_sets_.size()); }

  const std::vector<std::vector<int>>& index_sets() const { return index_sets_; }
  const std::vector<int>& index_set(int b) const { return index_sets_[b]; }

  /// J[b][i] in {0, 1}.
  bool member(int b, int i) const {
    return membership_[static_cast<std::size_t>(b) * n_ + i] != 0;
  }
  /// Membership as a dense B x n matrix of 0/1 doubles.
  Matrix membership_matrix() const;
  /// Indices of [0, n) absent from set b, ascending.
  std::vector<int> complement(int b) const;

  friend bool operator==(const SubsamplePlan& a, const SubsamplePlan& b);

 private:
  int n_ = 0;
  int r_ = 0;
  std::vector<std::vector<int>> index_sets_;
  std::vector<std::uint8_t> membership_;
};

/// B x l matrix of per-subsample predictions on l test points.
class EnsembleResult {
 public:
  EnsembleResult(Matrix predictions, SubsamplePlan plan);

  const Matrix& predictions() const { return predictions_; }
  const SubsamplePlan& plan() const { return plan_; }
  Index test_count() const { return predictions_.cols(); }

 private:
  Matrix predictions_;
  SubsamplePlan plan_;
};

/// Point prediction, standard error, and two-sided interval at one test point.
struct PredictionInference {
  double y_hat = 0.0;
  double sigma_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;

  /// Symmetric normal interval y_hat +- z_{1-alpha/2} * sigma_hat.
  static PredictionInference make(double y_hat, double sigma_hat, double alpha);
};

void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

}  // namespace ulearn
