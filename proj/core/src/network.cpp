#include "uafkit/network.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace uafkit {

double NetworkConfig::learning_rate() const {
  return std::visit([](const auto& opt) { return opt.learning_rate; }, optimizer);
}

void validate(const NetworkConfig& config) {
  if (config.layer_sizes.size() < 3) {
    throw std::invalid_argument("layer_sizes needs input, at least one hidden layer and output");
  }
  for (std::size_t i = 0; i < config.layer_sizes.size(); ++i) {
    if (config.layer_sizes[i] < 1) {
      throw std::invalid_argument("layer_sizes[" + std::to_string(i) + "] must be >= 1");
    }
  }
  if (!config.use_batch_norm.empty() &&
      static_cast<int>(config.use_batch_norm.size()) != config.hidden_layers()) {
    throw std::invalid_argument("use_batch_norm needs one flag per hidden layer");
  }
  if (config.batch_size < 1) {
    throw std::invalid_argument("batch_size must be positive");
  }
  if (config.epochs < 1) {
    throw std::invalid_argument("epochs must be positive");
  }
  if (!(config.learning_rate() > 0.0)) {
    throw std::invalid_argument("optimizer learning_rate must be positive");
  }
  if (config.uaf_learning_rate && !(*config.uaf_learning_rate >= 0.0)) {
    throw std::invalid_argument("uaf_learning_rate must be nonnegative");
  }
  if (!(config.bn_momentum > 0.0 && config.bn_momentum < 1.0)) {
    throw std::invalid_argument("bn_momentum must lie in (0, 1)");
  }
  if (!(config.bn_epsilon > 0.0)) {
    throw std::invalid_argument("bn_epsilon must be positive");
  }
  if (const auto* a = std::get_if<Adam>(&config.optimizer)) {
    if (!(a->beta1 >= 0.0 && a->beta1 < 1.0) || !(a->beta2 >= 0.0 && a->beta2 < 1.0) ||
        !(a->epsilon > 0.0)) {
      throw std::invalid_argument("adam needs beta1, beta2 in [0, 1) and epsilon > 0");
    }
  }
  const UafParams* p = nullptr;
  if (const auto* f = std::get_if<FixedUaf>(&config.activation)) p = &f->params;
  if (const auto* t = std::get_if<TrainableUaf>(&config.activation)) p = &t->init;
  if (p != nullptr && !p->is_finite()) {
    throw std::invalid_argument("activation parameters must be finite");
  }
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    purpose};
  return std::mt19937_64(seq);
}

constexpr std::uint32_t kInitStream = 101;
constexpr std::uint32_t kShuffleStream = 102;

bool batch_norm_enabled(const NetworkConfig& config, int layer) {
  return !config.use_batch_norm.empty() && config.use_batch_norm[layer];
}

}  // namespace

Network::Network(NetworkConfig config) : config_(std::move(config)) {
  validate(config_);
  auto rng = stream(config_.seed, kInitStream);
  const auto& sizes = config_.layer_sizes;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const int fan_in = sizes[k];
    const int fan_out = sizes[k + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(fan_out, fan_in);
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        layer.weights(i, j) = uniform(rng);
      }
    }
    layer.bias = Vector::Zero(fan_out);
    layers_.push_back(std::move(layer));
  }
  for (int k = 0; k < config_.hidden_layers(); ++k) {
    BatchNormState bn;
    bn.mu = Vector::Zero(sizes[k + 1]);
    bn.sigma = Vector::Ones(sizes[k + 1]);
    bn.momentum = config_.bn_momentum;
    bn.epsilon = config_.bn_epsilon;
    batch_norm_.push_back(std::move(bn));
  }
  if (const auto* f = std::get_if<FixedUaf>(&config_.activation)) uaf_ = f->params;
  if (const auto* t = std::get_if<TrainableUaf>(&config_.activation)) uaf_ = t->init;
}

double Network::activate(double x) const {
  if (const auto* exact = std::get_if<ExactActivation>(&config_.activation)) {
    return target_eval(exact->target, x);
  }
  return eval_stable(uaf_, x);
}

double Network::activate_derivative(double x) const {
  if (const auto* exact = std::get_if<ExactActivation>(&config_.activation)) {
    return target_derivative(exact->target, x);
  }
  return grad(uaf_, x).d_x;
}

ForwardPass Network::forward(const Matrix& batch, Mode mode) const {
  if (batch.cols() != config_.layer_sizes.front()) {
    throw std::invalid_argument("batch has " + std::to_string(batch.cols()) +
                                " columns, network expects " +
                                std::to_string(config_.layer_sizes.front()));
  }
  if (batch.rows() == 0) {
    throw std::invalid_argument("empty batch");
  }
  ForwardPass pass;
  pass.mode = mode;
  Matrix x = batch;
  for (int k = 0; k < config_.hidden_layers(); ++k) {
    const DenseLayer& layer = layers_[k];
    pass.layer_inputs.push_back(x);
    Matrix z = x * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();

    Matrix n = z;
    if (batch_norm_enabled(config_, k)) {
      Vector mean;
      Vector sigma;
      if (mode == Mode::Training) {
        mean = z.colwise().mean().transpose();
        const Matrix centered = z.rowwise() - mean.transpose();
        const Vector var = centered.array().square().colwise().mean().transpose();
        const double eps2 = batch_norm_[k].epsilon * batch_norm_[k].epsilon;
        sigma = (var.array() + eps2).sqrt();
      } else {
        mean = batch_norm_[k].mu;
        sigma = batch_norm_[k].sigma;
      }
      n = (z.rowwise() - mean.transpose()).array().rowwise() / sigma.transpose().array();
      pass.batch_mean.push_back(std::move(mean));
      pass.batch_sigma.push_back(std::move(sigma));
    } else {
      pass.batch_mean.emplace_back();
      pass.batch_sigma.emplace_back();
    }

    Matrix a = n.unaryExpr([this](double v) { return activate(v); });
    pass.pre.push_back(std::move(z));
    pass.normalized.push_back(std::move(n));
    pass.activated.push_back(a);
    x = std::move(a);
  }
  const DenseLayer& out = layers_.back();
  pass.layer_inputs.push_back(x);
  pass.output = x * out.weights.transpose();
  pass.output.rowwise() += out.bias.transpose();
  return pass;
}

Gradients Network::backward(const ForwardPass& pass, const Matrix& targets, TaskKind task) const {
  if (targets.rows() != pass.output.rows() || targets.cols() != pass.output.cols()) {
    throw std::invalid_argument("targets shape does not match network output");
  }
  const int hidden = config_.hidden_layers();
  const bool trainable = config_.trainable_activation();

  Gradients g;
  g.weights.resize(layers_.size());
  g.bias.resize(layers_.size());
  std::array<double, 5> uaf_grad{};

  Matrix upstream = loss_gradient(pass.output, targets, task);
  {
    const DenseLayer& out = layers_.back();
    g.weights.back() = upstream.transpose() * pass.layer_inputs.back();
    g.bias.back() = upstream.colwise().sum().transpose();
    upstream = upstream * out.weights;
  }

  for (int k = hidden - 1; k >= 0; --k) {
    const Matrix& n = pass.normalized[k];
    Matrix d_n(n.rows(), n.cols());
    for (Eigen::Index i = 0; i < n.rows(); ++i) {
      for (Eigen::Index j = 0; j < n.cols(); ++j) {
        const double up = upstream(i, j);
        if (trainable) {
          const UafGradient site = grad(uaf_, n(i, j));
          d_n(i, j) = up * site.d_x;
          uaf_grad[0] += up * site.d_A;
          uaf_grad[1] += up * site.d_B;
          uaf_grad[2] += up * site.d_C;
          uaf_grad[3] += up * site.d_D;
          uaf_grad[4] += up * site.d_E;
        } else {
          d_n(i, j) = up * activate_derivative(n(i, j));
        }
      }
    }

    Matrix d_z;
    if (batch_norm_enabled(config_, k)) {
      const Vector& sigma = pass.batch_sigma[k];
      if (pass.mode == Mode::Training) {
        const Eigen::RowVectorXd mean_dn = d_n.colwise().mean();
        const Eigen::RowVectorXd mean_dn_n = d_n.cwiseProduct(n).colwise().mean();
        Matrix centered = d_n.rowwise() - mean_dn;
        centered -= (n.array().rowwise() * mean_dn_n.array()).matrix();
        d_z = centered.array().rowwise() / sigma.transpose().array();
      } else {
        d_z = d_n.array().rowwise() / sigma.transpose().array();
      }
    } else {
      d_z = std::move(d_n);
    }

    g.weights[k] = d_z.transpose() * pass.layer_inputs[k];
    g.bias[k] = d_z.colwise().sum().transpose();
    if (k > 0) {
      upstream = d_z * layers_[k].weights;
    }
  }
  if (trainable) {
    g.uaf = uaf_grad;
  }
  return g;
}

void Network::update_running_stats(const ForwardPass& pass) {
  if (pass.mode != Mode::Training) {
    return;
  }
  for (int k = 0; k < config_.hidden_layers(); ++k) {
    if (!batch_norm_enabled(config_, k)) {
      continue;
    }
    BatchNormState& bn = batch_norm_[k];
    if (!bn.initialized) {
      bn.mu = pass.batch_mean[k];
      bn.sigma = pass.batch_sigma[k];
      bn.initialized = true;
    } else {
      bn.mu = bn.momentum * bn.mu + (1.0 - bn.momentum) * pass.batch_mean[k];
      bn.sigma = bn.momentum * bn.sigma + (1.0 - bn.momentum) * pass.batch_sigma[k];
    }
  }
}

namespace {

Matrix softmax_rows(const Matrix& logits) {
  Matrix out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp();
  const Vector sums = out.rowwise().sum();
  return out.array().colwise() / sums.array();
}

Eigen::Index argmax_row(const Matrix& m, Eigen::Index i) {
  Eigen::Index idx = 0;
  m.row(i).maxCoeff(&idx);
  return idx;
}

}  // namespace

double loss(const Matrix& output, const Matrix& targets, TaskKind task) {
  if (task == TaskKind::Regression) {
    return (output - targets).squaredNorm() / static_cast<double>(output.size());
  }
  const Vector row_max = output.rowwise().maxCoeff();
  const Matrix shifted = output.colwise() - row_max;
  const Vector log_sum = shifted.array().exp().rowwise().sum().log();
  double total = 0.0;
  for (Eigen::Index i = 0; i < output.rows(); ++i) {
    total -= targets.row(i).dot(shifted.row(i)) - log_sum(i) * targets.row(i).sum();
  }
  return total / static_cast<double>(output.rows());
}

Matrix loss_gradient(const Matrix& output, const Matrix& targets, TaskKind task) {
  if (task == TaskKind::Regression) {
    return 2.0 * (output - targets) / static_cast<double>(output.size());
  }
  return (softmax_rows(output) - targets) / static_cast<double>(output.rows());
}

double rmse(const Matrix& output, const Matrix& targets) {
  return std::sqrt((output - targets).squaredNorm() / static_cast<double>(output.size()));
}

double accuracy(const Matrix& output, const Matrix& targets) {
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < output.rows(); ++i) {
    correct += argmax_row(output, i) == argmax_row(targets, i) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(output.rows());
}

double macro_f1(const Matrix& output, const Matrix& targets) {
  const Eigen::Index k = targets.cols();
  std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0);
  for (Eigen::Index i = 0; i < output.rows(); ++i) {
    const Eigen::Index predicted = argmax_row(output, i);
    const Eigen::Index actual = argmax_row(targets, i);
    if (predicted == actual) {
      tp[actual] += 1.0;
    } else {
      fp[predicted] += 1.0;
      fn[actual] += 1.0;
    }
  }
  double sum = 0.0;
  for (Eigen::Index c = 0; c < k; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    sum += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  return sum / static_cast<double>(k);
}

namespace {

struct AdamMoments {
  Matrix m;
  Matrix v;
};

class Optimizer {
 public:
  Optimizer(const NetworkConfig& config, const Network& net) : config_(config) {
    for (const DenseLayer& layer : net.layers()) {
      weights_.push_back({Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                          Matrix::Zero(layer.weights.rows(), layer.weights.cols())});
      bias_.push_back({Matrix::Zero(layer.bias.rows(), 1), Matrix::Zero(layer.bias.rows(), 1)});
    }
    uaf_ = {Matrix::Zero(5, 1), Matrix::Zero(5, 1)};
  }

  void step(Network& net, const Gradients& g) {
    ++t_;
    const double lr = config_.learning_rate();
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
      apply(net.layers()[k].weights, g.weights[k], weights_[k], lr);
      Matrix bias = net.layers()[k].bias;
      apply(bias, g.bias[k], bias_[k], lr);
      net.layers()[k].bias = bias;
    }
    if (g.uaf) {
      Matrix p(5, 1);
      Matrix d(5, 1);
      for (int i = 0; i < 5; ++i) {
        p(i) = net.uaf()[kAllParams[i]];
        d(i) = (*g.uaf)[i];
      }
      apply(p, d, uaf_, config_.uaf_learning_rate.value_or(lr));
      for (int i = 0; i < 5; ++i) {
        net.uaf()[kAllParams[i]] = p(i);
      }
    }
  }

 private:
  void apply(Matrix& param, const Matrix& grad, AdamMoments& state, double lr) const {
    if (const auto* adam = std::get_if<Adam>(&config_.optimizer)) {
      state.m = adam->beta1 * state.m + (1.0 - adam->beta1) * grad;
      state.v = adam->beta2 * state.v + (1.0 - adam->beta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(adam->beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(adam->beta2, static_cast<double>(t_));
      param.array() -=
          lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + adam->epsilon);
    } else {
      param -= lr * grad;
    }
  }

  const NetworkConfig& config_;
  std::vector<AdamMoments> weights_;
  std::vector<AdamMoments> bias_;
  AdamMoments uaf_;
  long t_ = 0;
};

Matrix rows_of(const Matrix& m, RowRange r) { return m.middleRows(r.begin, r.size()); }

struct Evaluation {
  double metric = 0.0;
  std::optional<double> f1;
};

Evaluation evaluate(const Network& net, const Dataset& data, RowRange rows) {
  const Matrix out = net.forward(rows_of(data.inputs, rows), Mode::Inference).output;
  const Matrix targets = rows_of(data.targets, rows);
  if (data.kind == TaskKind::Regression) {
    return {rmse(out, targets), std::nullopt};
  }
  return {accuracy(out, targets), macro_f1(out, targets)};
}

}  // namespace

TrainReport train(const NetworkConfig& config, const Dataset& data) {
  Network net(config);
  return train(net, data);
}

TrainReport train(Network& net, const Dataset& data) {
  const NetworkConfig& config = net.config();
  validate(data);
  if (data.inputs.cols() != config.layer_sizes.front() ||
      data.targets.cols() != config.layer_sizes.back()) {
    throw std::invalid_argument("dataset shape does not match layer_sizes");
  }
  const auto start = std::chrono::steady_clock::now();

  TrainReport report;
  report.metric_name = data.kind == TaskKind::Regression ? "rmse" : "accuracy";
  const bool trainable = config.trainable_activation();
  if (trainable) {
    report.uaf_trajectory.emplace_back(0, net.uaf());
  }

  const RowRange train_rows = data.train_rows();
  RowRange val_rows = data.validation_rows();
  if (val_rows.size() == 0) val_rows = train_rows;
  RowRange test_rows = data.test_rows();
  if (test_rows.size() == 0) test_rows = val_rows;

  std::vector<Eigen::Index> order(train_rows.size());
  std::iota(order.begin(), order.end(), train_rows.begin);
  auto rng = stream(config.seed, kShuffleStream);
  Optimizer optimizer(config, net);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const auto count = static_cast<Eigen::Index>(end - begin);
      Matrix x(count, data.inputs.cols());
      Matrix y(count, data.targets.cols());
      for (Eigen::Index i = 0; i < count; ++i) {
        x.row(i) = data.inputs.row(order[begin + i]);
        y.row(i) = data.targets.row(order[begin + i]);
      }
      const ForwardPass pass = net.forward(x, Mode::Training);
      loss_sum += loss(pass.output, y, data.kind) * static_cast<double>(count);
      const Gradients g = net.backward(pass, y, data.kind);
      optimizer.step(net, g);
      net.update_running_stats(pass);
    }
    const double epoch_loss = loss_sum / static_cast<double>(order.size());
    report.loss_trace.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss) || !net.uaf().is_finite()) {
      report.failed = true;
      report.failure_epoch = epoch;
      break;
    }
    report.metric_trace.push_back(evaluate(net, data, val_rows).metric);
    if (trainable) {
      report.uaf_trajectory.emplace_back(epoch, net.uaf());
    }
  }

  if (!report.failed) {
    const Evaluation test = evaluate(net, data, test_rows);
    report.test_metric = test.metric;
    report.test_macro_f1 = test.f1;
  }
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace uafkit
