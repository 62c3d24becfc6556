#include "ulearn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace ulearn {

void MlpArchitecture::validate() const {
  if (widths.size() < 2) throw InvalidConfig("MlpArchitecture: need at least input and output widths");
  for (int w : widths) {
    if (w < 1) throw InvalidConfig("MlpArchitecture: widths must be positive");
  }
  if (widths.back() != 1) throw InvalidConfig("MlpArchitecture: output width must be 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw InvalidConfig("MlpArchitecture: dropout rate must lie in [0, 1)");
  }
}

MlpArchitecture MlpArchitecture::with_hidden(int inputs, std::vector<int> hidden,
                                             double dropout_rate) {
  MlpArchitecture arch;
  arch.widths.push_back(inputs);
  arch.widths.insert(arch.widths.end(), hidden.begin(), hidden.end());
  arch.widths.push_back(1);
  arch.dropout_rate = dropout_rate;
  arch.validate();
  return arch;
}

void MlpHyper::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidConfig("MlpHyper: learning rate must be positive");
  if (batch_size < 1) throw InvalidConfig("MlpHyper: batch size must be positive");
  if (max_epochs < 1) throw InvalidConfig("MlpHyper: max_epochs must be positive");
  if (patience < 0) throw InvalidConfig("MlpHyper: patience must be nonnegative");
  if (!(init_scale > 0.0)) throw InvalidConfig("MlpHyper: init scale must be positive");
}

bool operator==(const MlpFit& a, const MlpFit& b) {
  if (a.arch.widths != b.arch.widths || a.arch.dropout_rate != b.arch.dropout_rate) return false;
  if (a.weights.size() != b.weights.size() || a.stopped_epoch != b.stopped_epoch) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
  }
  if (a.training_log.size() != b.training_log.size()) return false;
  for (std::size_t e = 0; e < a.training_log.size(); ++e) {
    if (a.training_log[e].train_loss != b.training_log[e].train_loss ||
        a.training_log[e].valid_loss != b.training_log[e].valid_loss) {
      return false;
    }
  }
  return true;
}

namespace {

struct ForwardCache {
  std::vector<Matrix> inputs;       // input to layer l (after dropout for l >= 1)
  std::vector<Matrix> activations;  // pre-activations of hidden layers
  Eigen::RowVectorXd output;
};

void check_masks(const MlpFit& fit, const std::vector<Matrix>& masks, Index batch) {
  if (masks.empty()) return;
  const int hidden = fit.arch.depth();
  if (static_cast<int>(masks.size()) != hidden) {
    throw InvalidConfig("dropout masks: need one mask per hidden layer");
  }
  for (int l = 0; l < hidden; ++l) {
    if (masks[l].rows() != fit.arch.widths[l + 1] || masks[l].cols() != batch) {
      throw InvalidConfig("dropout masks: shape mismatch at layer " + std::to_string(l));
    }
  }
}

ForwardCache forward(const MlpFit& fit, const Matrix& batch_x, const std::vector<Matrix>& masks) {
  if (batch_x.cols() != fit.arch.widths.front()) {
    throw InvalidConfig("mlp forward: expected " + std::to_string(fit.arch.widths.front()) +
                        " features, got " + std::to_string(batch_x.cols()));
  }
  check_masks(fit, masks, batch_x.rows());
  const int hidden = fit.arch.depth();
  const double keep_scale = masks.empty() ? 1.0 : 1.0 / (1.0 - fit.arch.dropout_rate);

  ForwardCache cache;
  cache.inputs.reserve(static_cast<std::size_t>(hidden) + 1);
  cache.activations.reserve(static_cast<std::size_t>(hidden));
  cache.inputs.push_back(batch_x.transpose());
  for (int l = 0; l < hidden; ++l) {
    Matrix z = fit.weights[l] * cache.inputs.back();
    z.colwise() += fit.biases[l];
    Matrix h = z.cwiseMax(0.0);
    if (!masks.empty()) h = h.cwiseProduct(masks[l]) * keep_scale;
    cache.activations.push_back(std::move(z));
    cache.inputs.push_back(std::move(h));
  }
  cache.output = (fit.weights[hidden] * cache.inputs.back()).row(0);
  cache.output.array() += fit.biases[hidden](0);
  return cache;
}

}  // namespace

Vector mlp_forward_batch(const MlpFit& fit, const Matrix& rows) {
  return forward(fit, rows, {}).output.transpose();
}

double mlp_forward(const MlpFit& fit, const Vector& x) {
  if (x.size() != fit.arch.widths.front()) {
    throw InvalidConfig("mlp_forward: feature row has wrong length");
  }
  return mlp_forward_batch(fit, x.transpose())(0);
}

double mlp_batch_loss(const MlpFit& fit, const Matrix& batch_x, const Vector& batch_y,
                      const std::vector<Matrix>& masks) {
  const ForwardCache cache = forward(fit, batch_x, masks);
  return (cache.output.transpose() - batch_y).squaredNorm() / static_cast<double>(batch_y.size());
}

namespace {

MlpGradients backprop(const MlpFit& fit, const Matrix& batch_x, const Vector& batch_y,
                      const std::vector<Matrix>& masks, double* loss) {
  if (batch_x.rows() != batch_y.size() || batch_y.size() == 0) {
    throw InvalidConfig("mlp_backward: batch shape mismatch");
  }
  const ForwardCache cache = forward(fit, batch_x, masks);
  const int hidden = fit.arch.depth();
  const double keep_scale = masks.empty() ? 1.0 : 1.0 / (1.0 - fit.arch.dropout_rate);
  if (loss) *loss = (cache.output.transpose() - batch_y).squaredNorm();

  MlpGradients grads;
  grads.weights.resize(static_cast<std::size_t>(hidden) + 1);
  grads.biases.resize(static_cast<std::size_t>(hidden) + 1);

  // d(mean sq error)/d(output)
  Matrix delta = (2.0 / static_cast<double>(batch_y.size())) *
                 (cache.output - batch_y.transpose());
  for (int l = hidden; l >= 0; --l) {
    grads.weights[l] = delta * cache.inputs[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Matrix upstream = fit.weights[l].transpose() * delta;
    if (!masks.empty()) upstream = upstream.cwiseProduct(masks[l - 1]) * keep_scale;
    const Matrix& z = cache.activations[l - 1];
    delta = (z.array() > 0.0).select(upstream, 0.0);
  }
  return grads;
}

}  // namespace

MlpGradients mlp_backward(const MlpFit& fit, const Matrix& batch_x, const Vector& batch_y,
                          const std::vector<Matrix>& masks) {
  return backprop(fit, batch_x, batch_y, masks, nullptr);
}

MlpFit mlp_init(const MlpArchitecture& arch, double init_scale, std::uint64_t seed) {
  arch.validate();
  MlpFit fit;
  fit.arch = arch;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < arch.widths.size(); ++l) {
    const int fan_in = arch.widths[l];
    const int fan_out = arch.widths[l + 1];
    const double bound = init_scale * std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_out, fan_in);
    for (Index c = 0; c < w.cols(); ++c) {
      for (Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
    fit.weights.push_back(std::move(w));
    fit.biases.push_back(Vector::Zero(fan_out));
  }
  return fit;
}

namespace {

class Adam {
 public:
  Adam(const MlpFit& fit, double lr) : lr_(lr) {
    for (std::size_t l = 0; l < fit.weights.size(); ++l) {
      mw_.push_back(Matrix::Zero(fit.weights[l].rows(), fit.weights[l].cols()));
      vw_.push_back(mw_.back());
      mb_.push_back(Vector::Zero(fit.biases[l].size()));
      vb_.push_back(mb_.back());
    }
  }

  void step(MlpFit& fit, const MlpGradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t l = 0; l < fit.weights.size(); ++l) {
      update(fit.weights[l], mw_[l], vw_[l], g.weights[l], c1, c2);
      update(fit.biases[l], mb_[l], vb_[l], g.biases[l], c1, c2);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  template <typename M>
  void update(M& param, M& m, M& v, const M& grad, double c1, double c2) const {
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseAbs2();
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }

  double lr_;
  int t_ = 0;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
};

}  // namespace

MlpFit mlp_fit(const Dataset& train, const Dataset& valid, const MlpArchitecture& arch,
               const MlpHyper& hyper, std::uint64_t seed) {
  arch.validate();
  hyper.validate();
  if (train.n() < 1) throw InvalidConfig("mlp_fit: empty training set");
  if (valid.n() < 1) throw InvalidConfig("mlp_fit: empty validation set");
  if (train.p() != arch.widths.front() || valid.p() != arch.widths.front()) {
    throw InvalidConfig("mlp_fit: feature count does not match input width");
  }

  std::mt19937_64 rng(seed);
  MlpFit fit = mlp_init(arch, hyper.init_scale, rng());
  Adam adam(fit, hyper.learning_rate);

  const int n = static_cast<int>(train.n());
  const int hidden = arch.depth();
  const bool use_dropout = arch.dropout_rate > 0.0;
  std::bernoulli_distribution keep(1.0 - arch.dropout_rate);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  double best_valid = std::numeric_limits<double>::infinity();
  MlpFit best = fit;
  int since_best = 0;

  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += hyper.batch_size) {
      const int size = std::min(hyper.batch_size, n - start);
      Matrix bx(size, train.p());
      Vector by(size);
      for (int k = 0; k < size; ++k) {
        bx.row(k) = train.features().row(order[static_cast<std::size_t>(start + k)]);
        by(k) = train.responses()(order[static_cast<std::size_t>(start + k)]);
      }
      std::vector<Matrix> masks;
      if (use_dropout) {
        for (int l = 0; l < hidden; ++l) {
          Matrix m(arch.widths[l + 1], size);
          for (Index c = 0; c < m.cols(); ++c) {
            for (Index r = 0; r < m.rows(); ++r) m(r, c) = keep(rng) ? 1.0 : 0.0;
          }
          masks.push_back(std::move(m));
        }
      }
      double batch_loss = 0.0;
      const MlpGradients grads = backprop(fit, bx, by, masks, &batch_loss);
      loss_sum += batch_loss;
      adam.step(fit, grads);
    }

    EpochLog log;
    log.train_loss = loss_sum / n;
    log.valid_loss =
        (mlp_forward_batch(fit, valid.features()) - valid.responses()).squaredNorm() /
        static_cast<double>(valid.n());
    if (!std::isfinite(log.train_loss) || !std::isfinite(log.valid_loss)) {
      throw FitFailure("mlp_fit: loss diverged at epoch " + std::to_string(epoch) +
                       "; try a smaller learning rate");
    }
    fit.training_log.push_back(log);

    if (log.valid_loss < best_valid) {
      best_valid = log.valid_loss;
      best.weights = fit.weights;
      best.biases = fit.biases;
      best.stopped_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= hyper.patience) {
      break;
    }
  }

  best.training_log = std::move(fit.training_log);
  return best;
}

// ---------------------------------------------------------------- learner

namespace {

class MlpPredictor final : public FittedPredictor {
 public:
  MlpPredictor(MlpFit fit, Eigen::RowVectorXd offset, Eigen::RowVectorXd scale)
      : fit_(std::move(fit)), offset_(std::move(offset)), scale_(std::move(scale)) {}

  Vector predict(const Matrix& rows) const override {
    if (rows.cols() != offset_.size()) throw InvalidConfig("MlpPredictor: feature count mismatch");
    const Matrix scaled = (rows.rowwise() - offset_).array().rowwise() / scale_.array();
    return mlp_forward_batch(fit_, scaled);
  }

 private:
  MlpFit fit_;
  Eigen::RowVectorXd offset_;
  Eigen::RowVectorXd scale_;
};

}  // namespace

MlpLearner::MlpLearner(std::vector<int> hidden, double dropout_rate, MlpHyper hyper)
    : hidden_(std::move(hidden)), dropout_rate_(dropout_rate), hyper_(hyper) {
  MlpArchitecture::with_hidden(1, hidden_, dropout_rate_);
  hyper_.validate();
}

std::unique_ptr<FittedPredictor> MlpLearner::fit(const Dataset& train, const Dataset& valid,
                                                 std::uint64_t seed) const {
  const Eigen::RowVectorXd lo = train.features().colwise().minCoeff();
  Eigen::RowVectorXd range = train.features().colwise().maxCoeff() - lo;
  for (Index j = 0; j < range.size(); ++j) {
    if (!(range(j) > 0.0)) range(j) = 1.0;
  }
  auto scale = [&](const Dataset& d) {
    Matrix x = (d.features().rowwise() - lo).array().rowwise() / range.array();
    return Dataset(std::move(x), d.responses());
  };
  const auto arch = MlpArchitecture::with_hidden(static_cast<int>(train.p()), hidden_, dropout_rate_);
  MlpFit fit = mlp_fit(scale(train), scale(valid), arch, hyper_, seed);
  return std::make_unique<MlpPredictor>(std::move(fit), lo, range);
}

}  // namespace ulearn
