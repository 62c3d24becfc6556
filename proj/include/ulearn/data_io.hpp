#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ulearn/core_types.hpp"

namespace ulearn {

enum class NaPolicy { reject, drop_rows, impute_mean };

struct CsvSchema {
  std::string response_column;
  /// Empty means every column other than the response.
  std::vector<std::string> feature_columns;
  NaPolicy na_policy = NaPolicy::reject;
};

/// Comma-separated, '.' decimal, header row first. Cells "", "NA", "NaN",
/// "nan" and "null" are missing values.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<int> train_rows;
  std::vector<int> test_rows;
};

/// Random disjoint split with round(train_fraction * n) training rows.
SplitResult split(const Dataset& data, double train_fraction, std::uint64_t seed);

/// Random disjoint split with exactly `train_count` training rows.
SplitResult split_counts(const Dataset& data, int train_count, std::uint64_t seed);

/// One line of a per-point results file.
struct ResultRow {
  int id = 0;
  double y_hat = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> truth;
  std::optional<bool> covered;
};

std::vector<ResultRow> make_rows(const std::vector<PredictionInference>& inferences,
                                 const std::optional<Vector>& truth = std::nullopt);

/// Columns id,y_hat,se,lower,upper[,truth,covered]; reals printed in shortest
/// round-trip form.
void write_results(const std::vector<ResultRow>& rows, const std::string& path);
void write_results(const std::vector<PredictionInference>& inferences, const std::string& path,
                   const std::optional<Vector>& truth = std::nullopt);

std::vector<ResultRow> read_results(const std::string& path);

/// Flat JSON object of key/value pairs in the given order.
void write_summary(const std::vector<std::pair<std::string, double>>& entries,
                   const std::string& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);

}  // namespace ulearn
