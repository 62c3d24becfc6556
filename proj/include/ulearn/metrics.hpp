#pragma once

#include <vector>

#include "ulearn/core_types.hpp"

namespace ulearn {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

std::vector<Interval> intervals_of(const std::vector<PredictionInference>& inferences);

/// (1/l) sum |truth - pred|.
double mae(const Vector& truth, const Vector& pred);

/// (1/l) sum (pred - truth).
double bias(const Vector& truth, const Vector& pred);

/// Fraction of closed intervals [L, U] containing the truth.
double coverage(const Vector& truth, const std::vector<Interval>& intervals);

/// (1/l) sum (U - L).
double ail(const std::vector<Interval>& intervals);

/// Across-replicate standard deviation at each test point (rows = replicates,
/// columns = test points), averaged over test points. Needs >= 2 replicates.
double emp_sd(const Matrix& replicate_predictions);

/// Per-test-point version of emp_sd.
Vector emp_sd_per_point(const Matrix& replicate_predictions);

/// Metrics of a single replicate.
struct ReplicateMetrics {
  double bias = 0.0;
  double mae = 0.0;
  double mean_se = 0.0;  // NaN when the method has no standard error
  double cp = 0.0;
  double ail = 0.0;
  double runtime_seconds = 0.0;
};

/// One table row: replicate means plus the across-replicate EmpSD.
struct ReplicateSummary {
  double bias = 0.0;
  double mae = 0.0;
  double emp_sd = 0.0;
  double mean_se = 0.0;
  double cp = 0.0;
  double ail = 0.0;
  double runtime_seconds = 0.0;
};

ReplicateMetrics replicate_metrics(const Vector& truth, const Vector& pred, const Vector& se,
                                   const std::vector<Interval>& intervals,
                                   double runtime_seconds);

/// Means of the per-replicate metrics; emp_sd from the R x l prediction matrix
/// (0 when R = 1).
ReplicateSummary aggregate(const std::vector<ReplicateMetrics>& replicates,
                           const Matrix& replicate_predictions);

}  // namespace ulearn
