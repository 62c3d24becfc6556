#include "ulearn/core_types.hpp"

#include <algorithm>
#include <cmath>

#include "ulearn/normal.hpp"

namespace ulearn {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidData(std::string(what) + ": non-finite entry");
  }
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw InvalidData(std::string(what) + ": non-finite entry");
  }
}

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(Matrix features, Vector responses,
                 std::vector<std::string> feature_names)
    : features_(std::move(features)),
      responses_(std::move(responses)),
      names_(std::move(feature_names)) {
  if (features_.rows() != responses_.size()) {
    throw InvalidData("Dataset: feature rows (" + std::to_string(features_.rows()) +
                      ") != response length (" + std::to_string(responses_.size()) + ")");
  }
  if (!names_.empty() && static_cast<Index>(names_.size()) != features_.cols()) {
    throw InvalidData("Dataset: feature_names length does not match column count");
  }
  require_finite(features_, "Dataset features");
  require_finite(responses_, "Dataset responses");
}

Dataset Dataset::subset(std::span<const int> rows) const {
  Matrix x(static_cast<Index>(rows.size()), p());
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= n()) {
      throw InvalidConfig("Dataset::subset: row index out of range");
    }
    x.row(static_cast<Index>(k)) = features_.row(rows[k]);
    y(static_cast<Index>(k)) = responses_(rows[k]);
  }
  Dataset out;
  out.features_ = std::move(x);
  out.responses_ = std::move(y);
  out.names_ = names_;
  return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() && a.features_ == b.features_ &&
         a.responses_ == b.responses_ && a.names_ == b.names_;
}

// ---------------------------------------------------------------- seeds

std::uint64_t derive_seed(const SeedSpec& spec, std::uint64_t subsample_index) {
  std::uint64_t h = mix64(spec.master_seed + kGolden);
  h = mix64(h ^ (spec.stream_id + 1) * kGolden);
  h = mix64(h ^ (subsample_index + 1) * 0xD1B54A32D192ED03ULL);
  return h;
}

SeedSpec child_stream(const SeedSpec& spec, std::uint64_t tag) {
  return SeedSpec{derive_seed(spec, ~tag), spec.stream_id};
}

// ---------------------------------------------------------------- SubsamplePlan

SubsamplePlan::SubsamplePlan(int n, std::vector<std::vector<int>> index_sets)
    : n_(n), index_sets_(std::move(index_sets)) {
  if (n_ < 2) throw InvalidConfig("SubsamplePlan: n must be at least 2");
  if (index_sets_.empty()) throw InvalidConfig("SubsamplePlan: B must be at least 1");
  r_ = static_cast<int>(index_sets_.front().size());
  if (r_ < 1 || r_ >= n_) {
    throw InvalidConfig("SubsamplePlan: need 1 <= r < n, got r=" + std::to_string(r_) +
                        ", n=" + std::to_string(n_));
  }
  membership_.assign(index_sets_.size() * static_cast<std::size_t>(n_), 0);
  for (std::size_t b = 0; b < index_sets_.size(); ++b) {
    const auto& set = index_sets_[b];
    if (static_cast<int>(set.size()) != r_) {
      throw InvalidConfig("SubsamplePlan: index set " + std::to_string(b) +
                          " has size " + std::to_string(set.size()) + ", expected " +
                          std::to_string(r_));
    }
    for (int i : set) {
      if (i < 0 || i >= n_) {
        throw InvalidConfig("SubsamplePlan: index out of range in set " + std::to_string(b));
      }
      auto& cell = membership_[b * n_ + i];
      if (cell) {
        throw InvalidConfig("SubsamplePlan: duplicate index in set " + std::to_string(b));
      }
      cell = 1;
    }
  }
}

Matrix SubsamplePlan::membership_matrix() const {
  Matrix j(B(), n_);
  for (int b = 0; b < B(); ++b) {
    for (int i = 0; i < n_; ++i) j(b, i) = member(b, i) ? 1.0 : 0.0;
  }
  return j;
}

std::vector<int> SubsamplePlan::complement(int b) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_ - r_));
  for (int i = 0; i < n_; ++i) {
    if (!member(b, i)) out.push_back(i);
  }
  return out;
}

bool operator==(const SubsamplePlan& a, const SubsamplePlan& b) {
  return a.n_ == b.n_ && a.index_sets_ == b.index_sets_;
}

// ---------------------------------------------------------------- results

EnsembleResult::EnsembleResult(Matrix predictions, SubsamplePlan plan)
    : predictions_(std::move(predictions)), plan_(std::move(plan)) {
  if (predictions_.rows() != plan_.B()) {
    throw InvalidConfig("EnsembleResult: prediction rows must equal B");
  }
  require_finite(predictions_, "EnsembleResult predictions");
}

PredictionInference PredictionInference::make(double y_hat, double sigma_hat,
                                              double alpha) {
  if (!(sigma_hat >= 0.0)) throw InvalidConfig("sigma_hat must be nonnegative");
  const double half = two_sided_z(alpha) * sigma_hat;
  return PredictionInference{y_hat, sigma_hat, y_hat - half, y_hat + half, alpha};
}

}  // namespace ulearn
