#include "ulearn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ulearn/engine.hpp"
#include "ulearn/lasso.hpp"

namespace ulearn {

using nlohmann::json;

// ---------------------------------------------------------------- enums

std::string method_name(Method m) {
  switch (m) {
    case Method::ulearn_lasso: return "ulearn_lasso";
    case Method::ulearn_mlp: return "ulearn_mlp";
    case Method::oracle: return "oracle";
    case Method::swr: return "swr";
    case Method::naive_bootstrap: return "naive_bootstrap";
    case Method::conformal: return "conformal";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::ulearn_lasso, Method::ulearn_mlp, Method::oracle, Method::swr,
                   Method::naive_bootstrap, Method::conformal}) {
    if (method_name(m) == name) return m;
  }
  throw InvalidConfig("unknown method '" + name + "'");
}

namespace {

std::string kind_name(GeneratorConfig::Kind k) {
  switch (k) {
    case GeneratorConfig::Kind::linear: return "linear";
    case GeneratorConfig::Kind::scenario1: return "scenario1";
    case GeneratorConfig::Kind::scenario2: return "scenario2";
  }
  return "unknown";
}

GeneratorConfig::Kind parse_kind(const std::string& s) {
  if (s == "linear") return GeneratorConfig::Kind::linear;
  if (s == "scenario1") return GeneratorConfig::Kind::scenario1;
  if (s == "scenario2") return GeneratorConfig::Kind::scenario2;
  throw InvalidConfig("unknown generator kind '" + s + "'");
}

std::string na_name(NaPolicy p) {
  switch (p) {
    case NaPolicy::reject: return "reject";
    case NaPolicy::drop_rows: return "drop_rows";
    case NaPolicy::impute_mean: return "impute_mean";
  }
  return "reject";
}

NaPolicy parse_na(const std::string& s) {
  if (s == "reject") return NaPolicy::reject;
  if (s == "drop_rows") return NaPolicy::drop_rows;
  if (s == "impute_mean") return NaPolicy::impute_mean;
  throw InvalidConfig("unknown na_policy '" + s + "'");
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw InvalidConfig(std::string("unknown key '") + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

// ---------------------------------------------------------------- config

BaseKind ExperimentConfig::resolved_base() const {
  if (method == Method::ulearn_lasso || method == Method::oracle) return BaseKind::lasso;
  if (method == Method::ulearn_mlp) return BaseKind::mlp;
  if (base_learner) return *base_learner;
  return generator && generator->kind == GeneratorConfig::Kind::linear ? BaseKind::lasso
                                                                        : BaseKind::mlp;
}

int ExperimentConfig::resolved_B() const {
  if (B) return *B;
  return resolved_base() == BaseKind::lasso ? 500 : 300;
}

ConformityTarget ExperimentConfig::resolved_target() const {
  if (conformity_target) return *conformity_target;
  return generator ? ConformityTarget::true_f0 : ConformityTarget::observed_y;
}

void ExperimentConfig::validate() const {
  if (generator.has_value() == csv.has_value()) {
    throw InvalidConfig("config needs exactly one of 'generator' or 'csv'");
  }
  if (method == Method::oracle &&
      (!generator || generator->kind != GeneratorConfig::Kind::linear)) {
    throw InvalidConfig("oracle requires a linear generator with known support");
  }
  if (resolved_target() == ConformityTarget::true_f0 && !generator) {
    throw InvalidConfig("true_f0 conformity scores need a generator");
  }
  if (replicates < 1) throw InvalidConfig("replicates must be positive");
  if (generator && (n < 2 || test_size < 1)) throw InvalidConfig("n >= 2 and test_size >= 1 required");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConfig("alpha must lie in (0, 1)");
  if (resolved_B() < 2) throw InvalidConfig("B must be at least 2");
  if (workers < 1) throw InvalidConfig("workers must be positive");
  const bool subsamples = method == Method::ulearn_lasso || method == Method::ulearn_mlp ||
                          method == Method::oracle;
  if (subsamples && gamma.has_value() == r.has_value()) {
    throw InvalidConfig("set exactly one of 'gamma' or 'r'");
  }
  if (oob && method != Method::ulearn_lasso && method != Method::ulearn_mlp) {
    throw InvalidConfig("oob mode is only available for the U-learning methods");
  }
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"method", "generator", "csv", "n", "test_size", "gamma", "r", "B", "alpha",
                  "replicates", "base_learner", "lasso", "mlp", "conformal", "ij", "swr", "oob",
                  "seed", "workers"},
                 "config");
  ExperimentConfig c;
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());

  if (j.contains("generator")) {
    const json& g = j.at("generator");
    reject_unknown(g, {"kind", "p", "s0", "noise_sd", "design", "rho", "beta0"}, "generator");
    GeneratorConfig gen;
    if (g.contains("kind")) gen.kind = parse_kind(g.at("kind").get<std::string>());
    read(g, "p", gen.p);
    read(g, "s0", gen.s0);
    read_opt(g, "noise_sd", gen.noise_sd);
    if (g.contains("design")) {
      const auto d = g.at("design").get<std::string>();
      if (d == "uniform") gen.design = LinearDesign::iid_uniform;
      else if (d == "gaussian_ar1") gen.design = LinearDesign::gaussian_ar1;
      else throw InvalidConfig("unknown design '" + d + "'");
    }
    read(g, "rho", gen.rho);
    read(g, "beta0", gen.beta0);
    c.generator = gen;
  }
  if (j.contains("csv")) {
    const json& s = j.at("csv");
    reject_unknown(s, {"path", "response", "features", "na_policy", "train_fraction"}, "csv");
    CsvSource src;
    src.path = s.at("path").get<std::string>();
    src.schema.response_column = s.at("response").get<std::string>();
    read(s, "features", src.schema.feature_columns);
    if (s.contains("na_policy")) src.schema.na_policy = parse_na(s.at("na_policy").get<std::string>());
    read(s, "train_fraction", src.train_fraction);
    c.csv = src;
  }

  read(j, "n", c.n);
  read(j, "test_size", c.test_size);
  read_opt(j, "gamma", c.gamma);
  read_opt(j, "r", c.r);
  read_opt(j, "B", c.B);
  read(j, "alpha", c.alpha);
  read(j, "replicates", c.replicates);
  if (j.contains("base_learner")) {
    const auto b = j.at("base_learner").get<std::string>();
    if (b == "lasso") c.base_learner = BaseKind::lasso;
    else if (b == "mlp") c.base_learner = BaseKind::mlp;
    else throw InvalidConfig("unknown base_learner '" + b + "'");
  }
  if (j.contains("lasso")) {
    const json& l = j.at("lasso");
    reject_unknown(l, {"K", "folds", "grid_points", "tol", "cv_tol", "max_iter", "standardize"},
                   "lasso");
    read_opt(l, "K", c.lasso.K);
    read(l, "folds", c.lasso.folds);
    read(l, "grid_points", c.lasso.grid_points);
    read(l, "tol", c.lasso.tol);
    read(l, "cv_tol", c.lasso.cv_tol);
    read(l, "max_iter", c.lasso.max_iter);
    read(l, "standardize", c.lasso.standardize);
  }
  if (j.contains("mlp")) {
    const json& m = j.at("mlp");
    reject_unknown(m,
                   {"hidden", "dropout", "learning_rate", "batch_size", "max_epochs", "patience",
                    "init_scale"},
                   "mlp");
    read(m, "hidden", c.mlp.hidden);
    read(m, "dropout", c.mlp.dropout);
    read(m, "learning_rate", c.mlp.hyper.learning_rate);
    read(m, "batch_size", c.mlp.hyper.batch_size);
    read(m, "max_epochs", c.mlp.hyper.max_epochs);
    read(m, "patience", c.mlp.hyper.patience);
    read(m, "init_scale", c.mlp.hyper.init_scale);
  }
  if (j.contains("conformal")) {
    const json& k = j.at("conformal");
    reject_unknown(k, {"split_fraction", "target"}, "conformal");
    read(k, "split_fraction", c.conformal_split);
    if (k.contains("target")) {
      const auto t = k.at("target").get<std::string>();
      if (t == "true_f0") c.conformity_target = ConformityTarget::true_f0;
      else if (t == "observed_y") c.conformity_target = ConformityTarget::observed_y;
      else throw InvalidConfig("unknown conformity target '" + t + "'");
    }
  }
  if (j.contains("ij")) {
    reject_unknown(j.at("ij"), {"mc_correction"}, "ij");
    read(j.at("ij"), "mc_correction", c.mc_correction);
  }
  if (j.contains("swr")) {
    reject_unknown(j.at("swr"), {"indicator_membership"}, "swr");
    read(j.at("swr"), "indicator_membership", c.swr_indicator);
  }
  read(j, "oob", c.oob);
  read(j, "seed", c.seed);
  read(j, "workers", c.workers);
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["method"] = method_name(c.method);
  if (c.generator) {
    const auto& g = *c.generator;
    j["generator"] = {{"kind", kind_name(g.kind)},
                      {"p", g.p},
                      {"s0", g.s0},
                      {"design", g.design == LinearDesign::iid_uniform ? "uniform" : "gaussian_ar1"},
                      {"rho", g.rho},
                      {"beta0", g.beta0}};
    if (g.noise_sd) j["generator"]["noise_sd"] = *g.noise_sd;
  }
  if (c.csv) {
    j["csv"] = {{"path", c.csv->path},
                {"response", c.csv->schema.response_column},
                {"features", c.csv->schema.feature_columns},
                {"na_policy", na_name(c.csv->schema.na_policy)},
                {"train_fraction", c.csv->train_fraction}};
  }
  j["n"] = c.n;
  j["test_size"] = c.test_size;
  if (c.gamma) j["gamma"] = *c.gamma;
  if (c.r) j["r"] = *c.r;
  j["B"] = c.resolved_B();
  j["alpha"] = c.alpha;
  j["replicates"] = c.replicates;
  j["base_learner"] = c.resolved_base() == BaseKind::lasso ? "lasso" : "mlp";
  j["lasso"] = {{"folds", c.lasso.folds},         {"grid_points", c.lasso.grid_points},
                {"tol", c.lasso.tol},             {"cv_tol", c.lasso.cv_tol},
                {"max_iter", c.lasso.max_iter},   {"standardize", c.lasso.standardize}};
  if (c.lasso.K) j["lasso"]["K"] = *c.lasso.K;
  j["mlp"] = {{"hidden", c.mlp.hidden},
              {"dropout", c.mlp.dropout},
              {"learning_rate", c.mlp.hyper.learning_rate},
              {"batch_size", c.mlp.hyper.batch_size},
              {"max_epochs", c.mlp.hyper.max_epochs},
              {"patience", c.mlp.hyper.patience},
              {"init_scale", c.mlp.hyper.init_scale}};
  j["conformal"] = {
      {"split_fraction", c.conformal_split},
      {"target", c.resolved_target() == ConformityTarget::true_f0 ? "true_f0" : "observed_y"}};
  j["ij"] = {{"mc_correction", c.mc_correction}};
  j["swr"] = {{"indicator_membership", c.swr_indicator}};
  j["oob"] = c.oob;
  j["seed"] = c.seed;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidConfig("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------- running

namespace {

struct ReplicateOutput {
  Vector y_hat;
  Vector se;
  Vector lower;
  Vector upper;
  int r_used = 0;
};

ReplicateOutput from_inferences(const std::vector<PredictionInference>& inf) {
  ReplicateOutput out;
  const auto l = static_cast<Index>(inf.size());
  out.y_hat.resize(l);
  out.se.resize(l);
  out.lower.resize(l);
  out.upper.resize(l);
  for (Index t = 0; t < l; ++t) {
    const auto& x = inf[static_cast<std::size_t>(t)];
    out.y_hat(t) = x.y_hat;
    out.se(t) = x.sigma_hat;
    out.lower(t) = x.lower;
    out.upper(t) = x.upper;
  }
  return out;
}

class Problem {
 public:
  explicit Problem(const ExperimentConfig& c) : config_(c) {
    const SeedSpec root{c.seed, 0};
    if (c.generator) {
      const auto& g = *c.generator;
      if (g.kind == GeneratorConfig::Kind::linear) {
        linear_ = LinearTruth::make(g.p, g.s0, g.noise_sd.value_or(1.0), g.design, g.rho, g.beta0);
      } else {
        nonlinear_ = NonlinearTruth{g.kind == GeneratorConfig::Kind::scenario1 ? Scenario::S1
                                                                               : Scenario::S2,
                                    g.p, g.rho, g.noise_sd.value_or(0.5)};
      }
      const SimulatedData test = generate(c.test_size, derive_seed(root, 1));
      test_ = test.data;
      test_truth_ = test.truth;
    } else {
      const Dataset all = load_csv(c.csv->path, c.csv->schema);
      SplitResult s = split(all, c.csv->train_fraction, derive_seed(root, 2));
      fixed_train_ = std::move(s.train);
      test_ = std::move(s.test);
      test_truth_ = test_.responses();
    }
  }

  SimulatedData training_set(int replicate) const {
    if (!config_.generator) return {fixed_train_, fixed_train_.responses()};
    return generate(config_.n, derive_seed(SeedSpec{config_.seed, 3},
                                           static_cast<std::uint64_t>(replicate)));
  }

  const Dataset& test() const { return test_; }
  const Vector& test_truth() const { return test_truth_; }
  const std::optional<LinearTruth>& linear() const { return linear_; }

 private:
  SimulatedData generate(int n, std::uint64_t seed) const {
    return linear_ ? gen_linear(*linear_, n, seed) : gen_scenario(*nonlinear_, n, seed);
  }

  const ExperimentConfig& config_;
  std::optional<LinearTruth> linear_;
  std::optional<NonlinearTruth> nonlinear_;
  Dataset fixed_train_;
  Dataset test_;
  Vector test_truth_;
};

double choose_K(const ExperimentConfig& c, const Dataset& train, const SeedSpec& seed) {
  if (c.lasso.K) return *c.lasso.K;
  return select_K_cv(train, c.lasso.folds, default_K_grid(train, c.lasso.grid_points), seed,
                     c.lasso.cv_tol, c.lasso.max_iter);
}

std::unique_ptr<BaseLearner> make_learner(const ExperimentConfig& c, const Dataset& train,
                                          const SeedSpec& seed, bool warm_start) {
  if (c.resolved_base() == BaseKind::mlp) {
    return std::make_unique<MlpLearner>(c.mlp.hidden, c.mlp.dropout, c.mlp.hyper);
  }
  const double K = choose_K(c, train, child_stream(seed, 10));
  LassoOptions opts;
  opts.tol = c.lasso.tol;
  opts.max_iter = c.lasso.max_iter;
  opts.standardize = c.lasso.standardize;
  Vector warm;
  if (warm_start) warm = LassoLearner(K, opts).fit_coefficients(train).coefficients;
  return std::make_unique<LassoLearner>(K, opts, std::move(warm));
}

ReplicateOutput run_replicate(const ExperimentConfig& c, const Problem& problem,
                              const SimulatedData& train, const SeedSpec& seed) {
  const Dataset& data = train.data;
  const Matrix& test_x = problem.test().features();
  const IjOptions ij{c.mc_correction};
  const int n = static_cast<int>(data.n());

  switch (c.method) {
    case Method::ulearn_lasso:
    case Method::ulearn_mlp:
    case Method::oracle: {
      const int r = UlearnConfig{c.gamma, c.r, c.resolved_B(), c.alpha, c.oob}.resolve_r(n);
      const SubsamplePlan plan = make_plan(n, r, c.resolved_B(), child_stream(seed, 20));
      const SeedSpec fit_seed = child_stream(seed, 21);
      ReplicateOutput out;
      if (c.method == Method::oracle) {
        out = from_inferences(
            oracle_ols(data, problem.linear()->support(), plan, test_x, c.alpha, fit_seed, c.workers));
      } else {
        const auto learner = make_learner(c, data, seed, true);
        if (c.oob) {
          out = from_inferences(oob_predict(data, *learner, plan, fit_seed, c.alpha, c.workers, ij));
        } else {
          out = from_inferences(
              infer(ensemble_fit_predict(data, *learner, plan, test_x, fit_seed, c.workers),
                    c.alpha, ij));
        }
      }
      out.r_used = r;
      return out;
    }
    case Method::swr: {
      const auto learner = make_learner(c, data, seed, true);
      const SwrResult res =
          swr_ensemble(data, *learner, c.resolved_B(), test_x, child_stream(seed, 30), c.workers);
      return from_inferences(swr_infer(res, c.alpha, c.swr_indicator, ij));
    }
    case Method::naive_bootstrap: {
      const auto learner = make_learner(c, data, seed, true);
      return from_inferences(naive_bootstrap(data, *learner, c.resolved_B(), c.alpha, test_x,
                                             child_stream(seed, 40), c.workers));
    }
    case Method::conformal: {
      const auto learner = make_learner(c, data, seed, false);
      ConformalConfig cfg;
      cfg.alpha = c.alpha;
      cfg.split_fraction = c.conformal_split;
      cfg.conformity_target = c.resolved_target();
      std::optional<Vector> truth;
      if (cfg.conformity_target == ConformityTarget::true_f0) truth = train.truth;
      const ConformalResult res =
          split_conformal(data, test_x, *learner, cfg, truth, derive_seed(seed, 50));
      ReplicateOutput out;
      const auto l = static_cast<Index>(res.intervals.size());
      out.y_hat.resize(l);
      out.lower.resize(l);
      out.upper.resize(l);
      out.se = Vector::Constant(l, std::nan(""));
      for (Index t = 0; t < l; ++t) {
        out.y_hat(t) = res.intervals[static_cast<std::size_t>(t)].prediction;
        out.lower(t) = res.intervals[static_cast<std::size_t>(t)].lower;
        out.upper(t) = res.intervals[static_cast<std::size_t>(t)].upper;
      }
      return out;
    }
  }
  throw InvalidConfig("unhandled method");
}

std::string replicate_file(const std::filesystem::path& dir, int k) {
  char name[32];
  std::snprintf(name, sizeof(name), "replicate_%03d.csv", k);
  return (dir / name).string();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidData("cannot open '" + path.string() + "' for writing");
  out << text;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::string>& out_dir) {
  config.validate();
  const Problem problem(config);

  ExperimentResult result;
  result.config = config;
  std::optional<std::filesystem::path> dir;
  if (out_dir) {
    dir = *out_dir;
    std::filesystem::create_directories(*dir);
    write_text(*dir / "config.json", config_to_json(config).dump(2) + "\n");
  }

  const int R = config.replicates;
  for (int k = 0; k < R; ++k) {
    const auto start = std::chrono::steady_clock::now();
    const SimulatedData train = problem.training_set(k);
    const SeedSpec seed{derive_seed(SeedSpec{config.seed, 4}, static_cast<std::uint64_t>(k)), 0};

    ReplicateOutput out;
    try {
      out = run_replicate(config, problem, train, seed);
    } catch (const Error& e) {
      throw Error("replicate " + std::to_string(k) + ": " + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const Vector& truth = config.oob ? train.truth : problem.test_truth();
    const Index l = truth.size();
    if (k == 0) {
      result.r_used = out.r_used;
      result.truth = truth;
      result.predictions.resize(R, l);
      result.standard_errors.resize(R, l);
      result.lower.resize(R, l);
      result.upper.resize(R, l);
    }
    result.predictions.row(k) = out.y_hat.transpose();
    result.standard_errors.row(k) = out.se.transpose();
    result.lower.row(k) = out.lower.transpose();
    result.upper.row(k) = out.upper.transpose();

    std::vector<Interval> intervals(static_cast<std::size_t>(l));
    for (Index t = 0; t < l; ++t) intervals[static_cast<std::size_t>(t)] = {out.lower(t), out.upper(t)};
    const Vector se = config.method == Method::conformal ? Vector() : out.se;
    result.replicates.push_back(replicate_metrics(truth, out.y_hat, se, intervals, seconds));

    if (dir) {
      std::vector<ResultRow> rows;
      for (Index t = 0; t < l; ++t) {
        rows.push_back({static_cast<int>(t), out.y_hat(t), out.se(t), out.lower(t), out.upper(t),
                        truth(t), {}});
      }
      write_results(rows, replicate_file(*dir, k));
    }
  }

  result.summary = aggregate(result.replicates, result.predictions);
  // With OOB on simulated data the evaluation points change between replicates.
  if (config.oob && config.generator) result.summary.emp_sd = std::nan("");

  if (dir) {
    const auto& s = result.summary;
    write_summary({{"n", static_cast<double>(config.generator ? config.n : problem.training_set(0).data.n())},
                   {"r", static_cast<double>(result.r_used)},
                   {"B", static_cast<double>(config.resolved_B())},
                   {"alpha", config.alpha},
                   {"replicates", static_cast<double>(R)},
                   {"bias", s.bias},
                   {"mae", s.mae},
                   {"emp_sd", s.emp_sd},
                   {"se", s.mean_se},
                   {"cp", s.cp},
                   {"ail", s.ail}},
                  (*dir / "summary.json").string());

    std::ostringstream table;
    table << "method,Bias,MAE,EmpSD,SE,CP,AIL\n"
          << method_name(config.method) << ',' << format_real(s.bias) << ','
          << format_real(s.mae) << ',' << format_real(s.emp_sd) << ','
          << format_real(s.mean_se) << ',' << format_real(s.cp) << ',' << format_real(s.ail)
          << '\n';
    write_text(*dir / "summary.csv", table.str());

    std::ostringstream timing;
    timing << "replicate,seconds\n";
    for (int k = 0; k < R; ++k) {
      timing << k << ',' << format_real(result.replicates[static_cast<std::size_t>(k)].runtime_seconds)
             << '\n';
    }
    write_text(*dir / "timing.csv", timing.str());

    emit_plot_data(result, PlotKind::ci_per_test_point, (*dir / "plot_ci_per_test_point.csv").string());
    if (R >= 2) {
      emit_plot_data(result, PlotKind::se_vs_empsd, (*dir / "plot_se_vs_empsd.csv").string());
    }
  }
  return result;
}

void emit_plot_data(const ExperimentResult& result, PlotKind kind, const std::string& path) {
  const Index l = result.truth.size();
  if (l == 0 || result.predictions.rows() == 0) throw InvalidConfig("emit_plot_data: no results");
  std::ostringstream os;
  os << "test_id,x,series,value\n";

  if (kind == PlotKind::ci_per_test_point) {
    const Index R = result.predictions.rows();
    std::vector<Index> order(static_cast<std::size_t>(l));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return result.truth(a) < result.truth(b); });
    for (Index t : order) {
      double covered = 0.0;
      for (Index k = 0; k < R; ++k) {
        const double truth = result.truth(t);
        covered += (result.lower(k, t) <= truth && truth <= result.upper(k, t)) ? 1.0 : 0.0;
      }
      const std::string x = format_real(result.truth(t));
      os << t << ',' << x << ",lower," << format_real(result.lower.col(t).mean()) << '\n'
         << t << ',' << x << ",y_hat," << format_real(result.predictions.col(t).mean()) << '\n'
         << t << ',' << x << ",upper," << format_real(result.upper.col(t).mean()) << '\n'
         << t << ',' << x << ",coverage," << format_real(covered / static_cast<double>(R)) << '\n';
    }
  } else {
    const Vector sd = emp_sd_per_point(result.predictions);
    for (Index t = 0; t < l; ++t) {
      os << t << ',' << format_real(sd(t)) << ",mean_se,"
         << format_real(result.standard_errors.col(t).mean()) << '\n';
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidData("cannot open '" + path + "' for writing");
  out << os.str();
}

}  // namespace ulearn
