#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ulearn/baselines.hpp"
#include "ulearn/data_io.hpp"
#include "ulearn/metrics.hpp"
#include "ulearn/mlp.hpp"
#include "ulearn/simgen.hpp"

namespace ulearn {

enum class Method { ulearn_lasso, ulearn_mlp, oracle, swr, naive_bootstrap, conformal };
enum class BaseKind { lasso, mlp };

struct GeneratorConfig {
  enum class Kind { linear, scenario1, scenario2 };
  Kind kind = Kind::linear;
  int p = 1000;
  int s0 = 25;
  std::optional<double> noise_sd;  // 1.0 for linear, 0.5 for the scenarios
  LinearDesign design = LinearDesign::iid_uniform;
  double rho = 0.5;
  double beta0 = 0.0;
};

struct CsvSource {
  std::string path;
  CsvSchema schema;
  double train_fraction = 0.8;
};

struct LassoSettings {
  std::optional<double> K;  // skip cross-validation when set
  int folds = 5;
  int grid_points = 20;
  double tol = 1e-8;
  double cv_tol = 1e-6;
  int max_iter = 50000;
  bool standardize = false;
};

struct MlpSettings {
  std::vector<int> hidden{128, 64};
  double dropout = 0.5;
  MlpHyper hyper;
};

struct ExperimentConfig {
  Method method = Method::ulearn_lasso;
  std::optional<GeneratorConfig> generator;
  std::optional<CsvSource> csv;
  int n = 500;
  int test_size = 100;
  std::optional<double> gamma;
  std::optional<int> r;
  std::optional<int> B;  // 500 for Lasso, 300 for the MLP when unset
  double alpha = 0.05;
  int replicates = 1;
  std::optional<BaseKind> base_learner;
  LassoSettings lasso;
  MlpSettings mlp;
  double conformal_split = 0.5;
  std::optional<ConformityTarget> conformity_target;
  bool mc_correction = false;
  bool swr_indicator = false;
  bool oob = false;
  std::uint64_t seed = 1;
  int workers = 1;

  BaseKind resolved_base() const;
  int resolved_B() const;
  ConformityTarget resolved_target() const;
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
/// Snapshot of the experiment definition. Execution settings (workers) are left
/// out so that the snapshot is identical for any degree of parallelism.
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct ExperimentResult {
  ExperimentConfig config;
  int r_used = 0;          // 0 when the method does not subsample
  Vector truth;            // evaluation targets (fixed across replicates)
  Matrix predictions;      // R x l
  Matrix standard_errors;  // R x l, NaN for conformal
  Matrix lower;            // R x l
  Matrix upper;            // R x l
  std::vector<ReplicateMetrics> replicates;
  ReplicateSummary summary;
};

/// Runs every replicate and, when `out_dir` is given, writes config.json,
/// replicate_NNN.csv, summary.json, summary.csv, timing.csv and the plot-data
/// files into it.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::string>& out_dir = std::nullopt);

enum class PlotKind { ci_per_test_point, se_vs_empsd };

/// Long-format table test_id,x,series,value.
/// ci_per_test_point: x = truth, series in {lower, y_hat, upper, coverage}
///   averaged over replicates, rows sorted by truth.
/// se_vs_empsd: x = across-replicate EmpSD, series mean_se, one row per point.
void emit_plot_data(const ExperimentResult& result, PlotKind kind, const std::string& path);

}  // namespace ulearn
