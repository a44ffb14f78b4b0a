#pragma once

// Dense feed-forward network with optional normalize-only batch norm and a
// single UAF shared by every hidden neuron.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "uafkit/datasets.hpp"
#include "uafkit/targets.hpp"
#include "uafkit/uaf.hpp"

namespace uafkit {

/// UAF with frozen parameters (e.g. a preset).
struct FixedUaf {
  UafParams params;
};

/// The exact closed-form activation, no UAF involved.
struct ExactActivation {
  TargetActivation target;
};

/// One UAF parameter vector, learned jointly with the weights.
struct TrainableUaf {
  UafParams init;
};

using ActivationChoice = std::variant<FixedUaf, ExactActivation, TrainableUaf>;

/// Both variants leave the output layer affine; `None` is kept as a separate
/// spelling for configs that want to say "raw logits".
enum class OutputActivation { Identity, None };

struct Sgd {
  double learning_rate = 0.01;
};

struct Adam {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

using OptimizerConfig = std::variant<Sgd, Adam>;

struct NetworkConfig {
  std::vector<int> layer_sizes;  // input, hidden..., output
  ActivationChoice activation = TrainableUaf{preset(PresetKind::Identity)};
  std::vector<bool> use_batch_norm;  // one flag per hidden layer
  OutputActivation output_activation = OutputActivation::Identity;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer = Adam{};
  std::optional<double> uaf_learning_rate;  // defaults to the optimizer's rate
  int batch_size = 32;
  int epochs = 50;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;

  int hidden_layers() const { return static_cast<int>(layer_sizes.size()) - 2; }
  bool trainable_activation() const { return std::holds_alternative<TrainableUaf>(activation); }
  double learning_rate() const;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const NetworkConfig& config);

/// Running statistics for (x - mu) / sigma. Training normalizes with batch
/// statistics and folds them into the running values with `momentum`;
/// inference uses the running values. sigma = sqrt(var + epsilon^2).
struct BatchNormState {
  Vector mu;
  Vector sigma;
  double momentum = 0.9;
  double epsilon = 1e-5;
  bool initialized = false;
};

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
};

enum class Mode { Training, Inference };

/// Per-layer intermediates kept for backprop. Index k covers hidden layer k;
/// the output layer only contributes `output`.
struct ForwardPass {
  Mode mode = Mode::Training;
  std::vector<Matrix> layer_inputs;  // input to every dense layer
  std::vector<Matrix> pre;           // affine output of hidden layers
  std::vector<Matrix> normalized;    // after batch norm (== pre when disabled)
  std::vector<Vector> batch_mean;    // empty when batch norm is off for the layer
  std::vector<Vector> batch_sigma;
  std::vector<Matrix> activated;
  Matrix output;
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
  /// dL/dA..dL/dE summed over every activation site; present only when the
  /// activation is trainable.
  std::optional<std::array<double, 5>> uaf;
};

class Network {
 public:
  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero, seeded
  /// from config.seed.
  explicit Network(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<BatchNormState>& batch_norm() { return batch_norm_; }
  const std::vector<BatchNormState>& batch_norm() const { return batch_norm_; }

  /// The shared UAF parameters; meaningless for ExactActivation.
  UafParams& uaf() { return uaf_; }
  const UafParams& uaf() const { return uaf_; }

  double activate(double x) const;
  double activate_derivative(double x) const;

  ForwardPass forward(const Matrix& batch, Mode mode = Mode::Training) const;
  Gradients backward(const ForwardPass& pass, const Matrix& targets, TaskKind task) const;

  /// Folds a training pass's batch statistics into the running ones.
  void update_running_stats(const ForwardPass& pass);

 private:
  NetworkConfig config_;
  std::vector<DenseLayer> layers_;
  std::vector<BatchNormState> batch_norm_;
  UafParams uaf_;
};

/// Mean squared error (regression) or mean softmax cross-entropy.
double loss(const Matrix& output, const Matrix& targets, TaskKind task);
Matrix loss_gradient(const Matrix& output, const Matrix& targets, TaskKind task);

double rmse(const Matrix& output, const Matrix& targets);
double accuracy(const Matrix& output, const Matrix& targets);
double macro_f1(const Matrix& output, const Matrix& targets);

struct TrainReport {
  std::vector<double> loss_trace;                         // mean training loss per epoch
  std::vector<double> metric_trace;                       // validation RMSE or accuracy per epoch
  std::string metric_name;                                // "rmse" or "accuracy"
  std::vector<std::pair<int, UafParams>> uaf_trajectory;  // epoch 0 = init
  double test_metric = 0.0;
  std::optional<double> test_macro_f1;
  bool failed = false;
  int failure_epoch = -1;
  double wall_time = 0.0;
};

/// Mini-batch training; data shuffling and initialization are seeded from
/// config.seed. A non-finite loss stops the run and marks it failed.
TrainReport train(const NetworkConfig& config, const Dataset& data);

/// Trains `net` in place using its own config.
TrainReport train(Network& net, const Dataset& data);

}  // namespace uafkit
