#pragma once

#include <cstdint>
#include <vector>

#include "ulearn/core_types.hpp"
#include "ulearn/engine.hpp"

namespace ulearn {

/// Widths (p_0, ..., p_{L+1}) of a fully connected ReLU network with L hidden
/// layers. Dropout is applied after every hidden activation during training.
struct MlpArchitecture {
  std::vector<int> widths;
  double dropout_rate = 0.0;

  int depth() const { return static_cast<int>(widths.size()) - 2; }
  void validate() const;

  static MlpArchitecture with_hidden(int inputs, std::vector<int> hidden,
                                     double dropout_rate = 0.0);
};

struct MlpHyper {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 500;
  int patience = 20;
  /// Multiplies the He-uniform bound sqrt(6 / fan_in).
  double init_scale = 1.0;

  void validate() const;
};

struct EpochLog {
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

/// W_l is p_{l+1} x p_l, a_l has length p_{l+1}.
struct MlpFit {
  MlpArchitecture arch;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::vector<EpochLog> training_log;
  /// Epoch (0-based) whose weights were restored: the best validation loss.
  int stopped_epoch = 0;

  friend bool operator==(const MlpFit& a, const MlpFit& b);
};

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Inference-time forward pass (no dropout) for one feature row.
double mlp_forward(const MlpFit& fit, const Vector& x);

/// Forward pass for every row of `rows`.
Vector mlp_forward_batch(const MlpFit& fit, const Matrix& rows);

/// Mean squared error of the network on a batch under fixed binary dropout
/// masks (one p_l x batch matrix per hidden layer; kept units are scaled by
/// 1/(1 - rate)). Empty `masks` means no dropout.
double mlp_batch_loss(const MlpFit& fit, const Matrix& batch_x, const Vector& batch_y,
                      const std::vector<Matrix>& masks);

/// Exact gradients of mlp_batch_loss with respect to every weight and bias.
MlpGradients mlp_backward(const MlpFit& fit, const Matrix& batch_x, const Vector& batch_y,
                          const std::vector<Matrix>& masks);

/// He-uniform initialization driven by `seed`.
MlpFit mlp_init(const MlpArchitecture& arch, double init_scale, std::uint64_t seed);

/// Adam on MSE with per-epoch shuffling and dropout; stops after `patience`
/// epochs without validation improvement and restores the best weights.
MlpFit mlp_fit(const Dataset& train, const Dataset& valid, const MlpArchitecture& arch,
               const MlpHyper& hyper, std::uint64_t seed);

/// MLP base learner. Features are min-max scaled to [0, 1] with statistics of
/// the training subsample; the first width is replaced by the feature count.
class MlpLearner final : public BaseLearner {
 public:
  MlpLearner(std::vector<int> hidden, double dropout_rate, MlpHyper hyper = {});

  std::unique_ptr<FittedPredictor> fit(const Dataset& train, const Dataset& valid,
                                       std::uint64_t seed) const override;

 private:
  std::vector<int> hidden_;
  double dropout_rate_;
  MlpHyper hyper_;
};

}  // namespace ulearn
