#include "ulearn/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace ulearn {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

std::optional<double> parse_real(const std::string& cell) {
  double value = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidData("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw InvalidData("format_real: conversion failed");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------- loading

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InvalidData("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw InvalidData("'" + path + "' is empty or has no header row");
  }
  const std::vector<std::string> header = split_line(line);
  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidData("column '" + name + "' not found in '" + path + "'");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t response = column_of(schema.response_column);
  std::vector<std::size_t> features;
  std::vector<std::string> names;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == response) continue;
      features.push_back(c);
      names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      if (name == schema.response_column) {
        throw InvalidConfig("CsvSchema: response column listed among features");
      }
      features.push_back(column_of(name));
      names.push_back(name);
    }
  }

  // Row-major staging; NaN marks a missing cell.
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw InvalidData("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " cells, got " +
                        std::to_string(cells.size()));
    }
    std::vector<double> row(features.size() + 1, 0.0);
    for (std::size_t k = 0; k <= features.size(); ++k) {
      const std::size_t col = k < features.size() ? features[k] : response;
      const std::string& cell = cells[col];
      if (is_missing(cell)) {
        if (schema.na_policy == NaPolicy::reject) {
          throw InvalidData("'" + path + "' line " + std::to_string(line_no) +
                            ": missing value in column '" + header[col] + "'");
        }
        row[k] = std::nan("");
        continue;
      }
      const auto value = parse_real(cell);
      if (!value || !std::isfinite(*value)) {
        throw InvalidData("'" + path + "' line " + std::to_string(line_no) +
                          ": non-numeric cell '" + cell + "' in column '" + header[col] + "'");
      }
      row[k] = *value;
    }
    rows.push_back(std::move(row));
  }

  if (schema.na_policy == NaPolicy::drop_rows) {
    std::erase_if(rows, [](const auto& row) {
      return std::any_of(row.begin(), row.end(), [](double v) { return std::isnan(v); });
    });
  } else if (schema.na_policy == NaPolicy::impute_mean) {
    const std::size_t width = features.size() + 1;
    for (std::size_t k = 0; k < width; ++k) {
      double sum = 0.0;
      std::size_t seen = 0;
      for (const auto& row : rows) {
        if (!std::isnan(row[k])) sum += row[k], ++seen;
      }
      if (seen == 0) {
        throw InvalidData("column '" + header[k < features.size() ? features[k] : response] +
                          "' has no observed values to impute from");
      }
      const double mean = sum / static_cast<double>(seen);
      for (auto& row : rows) {
        if (std::isnan(row[k])) row[k] = mean;
      }
    }
  }
  if (rows.empty()) throw InvalidData("'" + path + "' has no data rows");

  Matrix x(static_cast<Index>(rows.size()), static_cast<Index>(features.size()));
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < features.size(); ++k) {
      x(static_cast<Index>(r), static_cast<Index>(k)) = rows[r][k];
    }
    y(static_cast<Index>(r)) = rows[r].back();
  }
  return Dataset(std::move(x), std::move(y), std::move(names));
}

// ---------------------------------------------------------------- splitting

SplitResult split_counts(const Dataset& data, int train_count, std::uint64_t seed) {
  const int n = static_cast<int>(data.n());
  if (train_count < 1 || train_count >= n) {
    throw InvalidConfig("split: both parts must be nonempty (n=" + std::to_string(n) +
                        ", train=" + std::to_string(train_count) + ")");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitResult out;
  out.train_rows.assign(order.begin(), order.begin() + train_count);
  out.test_rows.assign(order.begin() + train_count, order.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  out.train = data.subset(out.train_rows);
  out.test = data.subset(out.test_rows);
  return out;
}

SplitResult split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidConfig("split: train fraction must lie in (0, 1)");
  }
  const auto count = static_cast<int>(std::llround(train_fraction * static_cast<double>(data.n())));
  return split_counts(data, count, seed);
}

// ---------------------------------------------------------------- results

std::vector<ResultRow> make_rows(const std::vector<PredictionInference>& inferences,
                                 const std::optional<Vector>& truth) {
  if (truth && truth->size() != static_cast<Index>(inferences.size())) {
    throw InvalidConfig("make_rows: truth length must match the inference count");
  }
  std::vector<ResultRow> rows;
  rows.reserve(inferences.size());
  for (std::size_t k = 0; k < inferences.size(); ++k) {
    const auto& inf = inferences[k];
    ResultRow row{static_cast<int>(k), inf.y_hat, inf.sigma_hat, inf.lower, inf.upper, {}, {}};
    if (truth) {
      const double t = (*truth)(static_cast<Index>(k));
      row.truth = t;
      row.covered = inf.lower <= t && t <= inf.upper;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_results(const std::vector<ResultRow>& rows, const std::string& path) {
  const bool with_truth = !rows.empty() && rows.front().truth.has_value();
  std::ostringstream os;
  os << "id,y_hat,se,lower,upper" << (with_truth ? ",truth,covered" : "") << '\n';
  for (const auto& row : rows) {
    if (row.truth.has_value() != with_truth) {
      throw InvalidConfig("write_results: rows disagree on whether truth is present");
    }
    os << row.id << ',' << format_real(row.y_hat) << ',' << format_real(row.se) << ','
       << format_real(row.lower) << ',' << format_real(row.upper);
    if (with_truth) {
      const bool covered =
          row.covered.value_or(row.lower <= *row.truth && *row.truth <= row.upper);
      os << ',' << format_real(*row.truth) << ',' << (covered ? 1 : 0);
    }
    os << '\n';
  }
  auto out = open_output(path);
  out << os.str();
  if (!out) throw InvalidData("failed writing '" + path + "'");
}

void write_results(const std::vector<PredictionInference>& inferences, const std::string& path,
                   const std::optional<Vector>& truth) {
  write_results(make_rows(inferences, truth), path);
}

std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidData("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidData("'" + path + "' is empty");
  const auto header = split_line(line);
  const bool with_truth = header.size() == 7;
  if (header.size() != 5 && !with_truth) throw InvalidData("'" + path + "': unexpected header");

  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) throw InvalidData("'" + path + "': ragged row");
    auto real = [&](std::size_t k) {
      const auto v = parse_real(cells[k]);
      if (!v) throw InvalidData("'" + path + "': bad number '" + cells[k] + "'");
      return *v;
    };
    ResultRow row;
    row.id = static_cast<int>(real(0));
    row.y_hat = real(1);
    row.se = real(2);
    row.lower = real(3);
    row.upper = real(4);
    if (with_truth) {
      row.truth = real(5);
      row.covered = cells[6] == "1";
    }
    rows.push_back(row);
  }
  return rows;
}

void write_summary(const std::vector<std::pair<std::string, double>>& entries,
                   const std::string& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, value] : entries) {
    if (std::isfinite(value)) {
      j[key] = value;
    } else {
      j[key] = nullptr;
    }
  }
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw InvalidData("failed writing '" + path + "'");
}

}  // namespace ulearn
