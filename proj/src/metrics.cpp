#include "ulearn/metrics.hpp"

#include <cmath>
#include <string>

namespace ulearn {

namespace {

void same_length(Index a, Index b, const char* what) {
  if (a != b) throw InvalidConfig(std::string(what) + ": length mismatch");
  if (a < 1) throw InvalidConfig(std::string(what) + ": empty input");
}

}  // namespace

std::vector<Interval> intervals_of(const std::vector<PredictionInference>& inferences) {
  std::vector<Interval> out;
  out.reserve(inferences.size());
  for (const auto& inf : inferences) out.push_back({inf.lower, inf.upper});
  return out;
}

double mae(const Vector& truth, const Vector& pred) {
  same_length(truth.size(), pred.size(), "mae");
  return (truth - pred).cwiseAbs().mean();
}

double bias(const Vector& truth, const Vector& pred) {
  same_length(truth.size(), pred.size(), "bias");
  return (pred - truth).mean();
}

double coverage(const Vector& truth, const std::vector<Interval>& intervals) {
  same_length(truth.size(), static_cast<Index>(intervals.size()), "coverage");
  Index hits = 0;
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const auto& iv = intervals[k];
    if (iv.lower > iv.upper) {
      throw InvalidConfig("coverage: interval " + std::to_string(k) + " has lower > upper");
    }
    const double t = truth(static_cast<Index>(k));
    if (iv.lower <= t && t <= iv.upper) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

double ail(const std::vector<Interval>& intervals) {
  if (intervals.empty()) throw InvalidConfig("ail: empty input");
  double total = 0.0;
  for (const auto& iv : intervals) total += iv.upper - iv.lower;
  return total / static_cast<double>(intervals.size());
}

Vector emp_sd_per_point(const Matrix& replicate_predictions) {
  const Index R = replicate_predictions.rows();
  if (R < 2) throw InvalidConfig("emp_sd: needs at least 2 replicates");
  const Matrix centered = replicate_predictions.rowwise() - replicate_predictions.colwise().mean();
  return (centered.colwise().squaredNorm() / static_cast<double>(R - 1)).cwiseSqrt().transpose();
}

double emp_sd(const Matrix& replicate_predictions) {
  return emp_sd_per_point(replicate_predictions).mean();
}

ReplicateMetrics replicate_metrics(const Vector& truth, const Vector& pred, const Vector& se,
                                   const std::vector<Interval>& intervals,
                                   double runtime_seconds) {
  ReplicateMetrics m;
  m.bias = bias(truth, pred);
  m.mae = mae(truth, pred);
  m.mean_se = se.size() > 0 ? se.mean() : std::nan("");
  m.cp = coverage(truth, intervals);
  m.ail = ail(intervals);
  m.runtime_seconds = runtime_seconds;
  return m;
}

ReplicateSummary aggregate(const std::vector<ReplicateMetrics>& replicates,
                           const Matrix& replicate_predictions) {
  if (replicates.empty()) throw InvalidConfig("aggregate: no replicates");
  if (replicate_predictions.rows() != static_cast<Index>(replicates.size())) {
    throw InvalidConfig("aggregate: prediction rows must equal replicate count");
  }
  ReplicateSummary s;
  for (const auto& r : replicates) {
    s.bias += r.bias;
    s.mae += r.mae;
    s.mean_se += r.mean_se;
    s.cp += r.cp;
    s.ail += r.ail;
    s.runtime_seconds += r.runtime_seconds;
  }
  const double count = static_cast<double>(replicates.size());
  s.bias /= count;
  s.mae /= count;
  s.mean_se /= count;
  s.cp /= count;
  s.ail /= count;
  s.runtime_seconds /= count;
  s.emp_sd = replicates.size() >= 2 ? emp_sd(replicate_predictions) : 0.0;
  return s;
}

}  // namespace ulearn
