#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "uafkit/network.hpp"

namespace {

using namespace uafkit;

const UafParams kWiggly{1.2, 0.3, -0.1, -0.8, 0.05};

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Matrix one_hot(Eigen::Index rows, Eigen::Index classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix m = Matrix::Zero(rows, classes);
  for (Eigen::Index i = 0; i < rows; ++i) m(i, static_cast<Eigen::Index>(rng() % classes)) = 1.0;
  return m;
}

NetworkConfig small_config(ActivationChoice activation, bool batch_norm) {
  NetworkConfig c;
  c.layer_sizes = {4, 3, 2};
  c.activation = std::move(activation);
  c.use_batch_norm = {batch_norm};
  c.seed = 17;
  return c;
}

TEST(Forward, ZeroWeightsGiveZeroOutput) {
  NetworkConfig c;
  c.layer_sizes = {3, 5, 2};
  c.activation = FixedUaf{preset(PresetKind::Identity)};
  Network net(c);
  for (DenseLayer& layer : net.layers()) {
    layer.weights.setZero();
    layer.bias.setZero();
  }
  EXPECT_TRUE(net.forward(random_matrix(6, 3, 1)).output.isZero(0.0));
}

TEST(Forward, IdentityChainReproducesInput) {
  NetworkConfig c;
  c.layer_sizes = {1, 1, 1};
  c.activation = TrainableUaf{preset(PresetKind::Identity)};
  Network net(c);
  for (DenseLayer& layer : net.layers()) {
    layer.weights.setOnes();
    layer.bias.setZero();
  }
  const Matrix x = (Matrix(4, 1) << -3.0, -0.5, 0.0, 2.5).finished();
  EXPECT_TRUE(net.forward(x).output.isApprox(x, 1e-15));
}

TEST(Forward, BatchNormOfOneTwoThree) {
  NetworkConfig c;
  c.layer_sizes = {1, 1, 1};
  c.use_batch_norm = {true};
  c.activation = FixedUaf{preset(PresetKind::Identity)};
  Network net(c);
  net.layers()[0].weights.setOnes();
  net.layers()[0].bias.setZero();
  const Matrix x = (Matrix(3, 1) << 1.0, 2.0, 3.0).finished();
  const Matrix n = net.forward(x).normalized[0];
  const double mean = n.mean();
  const double std = std::sqrt((n.array() - mean).square().mean());
  EXPECT_NEAR(mean, 0.0, 1e-9);
  EXPECT_NEAR(std, 1.0, 1e-9);
  EXPECT_NEAR(n(2, 0), std::sqrt(1.5), 1e-9);
}

TEST(Forward, BatchNormStandardizesEveryFeature) {
  NetworkConfig c;
  c.layer_sizes = {6, 10, 7, 3};
  c.use_batch_norm = {true, true};
  c.activation = TrainableUaf{kWiggly};
  c.seed = 5;
  Network net(c);
  const ForwardPass pass = net.forward(random_matrix(32, 6, 2) * 4.0);
  for (const Matrix& n : pass.normalized) {
    for (Eigen::Index j = 0; j < n.cols(); ++j) {
      const double mean = n.col(j).mean();
      const double std = std::sqrt((n.col(j).array() - mean).square().mean());
      EXPECT_LT(std::abs(mean), 1e-7);
      EXPECT_NEAR(std, 1.0, 1e-7);
    }
  }
}

TEST(Forward, RejectsShapeMismatch) {
  Network net(small_config(TrainableUaf{kWiggly}, false));
  EXPECT_THROW(net.forward(random_matrix(8, 5, 1)), std::invalid_argument);
  const ForwardPass pass = net.forward(random_matrix(8, 4, 1));
  EXPECT_THROW(net.backward(pass, random_matrix(8, 3, 2), TaskKind::Regression),
               std::invalid_argument);
  EXPECT_THROW(net.backward(pass, random_matrix(7, 2, 2), TaskKind::Regression),
               std::invalid_argument);
}

TEST(Forward, InferenceUsesRunningStatistics) {
  NetworkConfig c = small_config(FixedUaf{preset(PresetKind::Identity)}, true);
  c.bn_momentum = 0.75;
  Network net(c);
  const ForwardPass first = net.forward(random_matrix(8, 4, 1));
  net.update_running_stats(first);
  EXPECT_EQ(net.batch_norm()[0].mu, first.batch_mean[0]);
  EXPECT_EQ(net.batch_norm()[0].sigma, first.batch_sigma[0]);

  const ForwardPass second = net.forward(random_matrix(8, 4, 2));
  net.update_running_stats(second);
  const Vector expected_mu = 0.75 * first.batch_mean[0] + 0.25 * second.batch_mean[0];
  EXPECT_TRUE(net.batch_norm()[0].mu.isApprox(expected_mu, 1e-15));
  EXPECT_GT(net.batch_norm()[0].sigma.minCoeff(), 0.0);

  const Matrix probe = random_matrix(3, 4, 3);
  const ForwardPass inference = net.forward(probe, Mode::Inference);
  Matrix z = probe * net.layers()[0].weights.transpose();
  z.rowwise() += net.layers()[0].bias.transpose();
  const Matrix expected = (z.rowwise() - net.batch_norm()[0].mu.transpose()).array().rowwise() /
                          net.batch_norm()[0].sigma.transpose().array();
  EXPECT_TRUE(inference.normalized[0].isApprox(expected, 1e-14));
}

/// Every trainable scalar of the network, addressed uniformly for the
/// finite-difference check.
std::vector<std::pair<std::string, std::function<double&(Network&)>>> all_parameters(
    const Network& net) {
  std::vector<std::pair<std::string, std::function<double&(Network&)>>> out;
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto& layer = net.layers()[k];
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      out.emplace_back("W" + std::to_string(k) + "[" + std::to_string(i) + "]",
                       [k, i](Network& n) -> double& { return n.layers()[k].weights.data()[i]; });
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      out.emplace_back("b" + std::to_string(k) + "[" + std::to_string(i) + "]",
                       [k, i](Network& n) -> double& { return n.layers()[k].bias(i); });
    }
  }
  return out;
}

void check_gradients(const NetworkConfig& config, TaskKind task) {
  Network net(config);
  const Matrix x = random_matrix(8, 4, 21);
  const Matrix y = task == TaskKind::Regression ? random_matrix(8, 2, 22) : one_hot(8, 2, 22);
  const Gradients g = net.backward(net.forward(x), y, task);

  const double h = 1e-5;
  auto loss_at = [&](Network& n) { return loss(n.forward(x).output, y, task); };
  auto relative = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
  };

  for (const auto& [name, ref] : all_parameters(net)) {
    Network probe = net;
    const double base = ref(probe);
    ref(probe) = base + h;
    const double up = loss_at(probe);
    ref(probe) = base - h;
    const double down = loss_at(probe);
    const double numeric = (up - down) / (2.0 * h);
    const auto k = static_cast<std::size_t>(name[1] - '0');
    const auto i = static_cast<Eigen::Index>(std::stoi(name.substr(name.find('[') + 1)));
    const double analytic = name[0] == 'W' ? g.weights[k].data()[i] : g.bias[k](i);
    EXPECT_LT(relative(analytic, numeric), 1e-4)
        << name << " analytic=" << analytic << " numeric=" << numeric;
  }

  if (!config.trainable_activation()) {
    EXPECT_FALSE(g.uaf.has_value());
    return;
  }
  ASSERT_TRUE(g.uaf.has_value());
  for (ParamId id : kAllParams) {
    Network probe = net;
    const double base = probe.uaf()[id];
    probe.uaf()[id] = base + h;
    const double up = loss_at(probe);
    probe.uaf()[id] = base - h;
    const double down = loss_at(probe);
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = (*g.uaf)[static_cast<int>(id)];
    EXPECT_LT(relative(analytic, numeric), 1e-4)
        << param_name(id) << " analytic=" << analytic << " numeric=" << numeric;
  }
}

TEST(Backward, MatchesFiniteDifferencesWithTrainableUaf) {
  check_gradients(small_config(TrainableUaf{kWiggly}, false), TaskKind::Regression);
}

TEST(Backward, MatchesFiniteDifferencesWithBatchNorm) {
  check_gradients(small_config(TrainableUaf{kWiggly}, true), TaskKind::Regression);
}

TEST(Backward, MatchesFiniteDifferencesForClassification) {
  check_gradients(small_config(TrainableUaf{kWiggly}, true), TaskKind::Classification);
}

TEST(Backward, MatchesFiniteDifferencesAcrossTwoHiddenLayers) {
  NetworkConfig c = small_config(TrainableUaf{preset(PresetKind::Tanh)}, true);
  c.layer_sizes = {4, 3, 3, 2};
  c.use_batch_norm = {true, false};
  check_gradients(c, TaskKind::Regression);
}

TEST(Backward, FixedAndExactActivationsEmitNoUafGradient) {
  check_gradients(small_config(FixedUaf{kWiggly}, true), TaskKind::Regression);
  check_gradients(small_config(ExactActivation{PresetKind::Sigmoid}, false), TaskKind::Regression);
}

TEST(Backward, ZeroResidualGivesZeroGradient) {
  for (bool bn : {false, true}) {
    Network net(small_config(TrainableUaf{kWiggly}, bn));
    const Matrix x = random_matrix(8, 4, 3);
    const ForwardPass pass = net.forward(x);
    const Gradients g = net.backward(pass, pass.output, TaskKind::Regression);
    for (const Matrix& w : g.weights) EXPECT_LT(w.cwiseAbs().maxCoeff(), 1e-10);
    for (const Vector& b : g.bias) EXPECT_LT(b.cwiseAbs().maxCoeff(), 1e-10);
    for (double d : *g.uaf) EXPECT_LT(std::abs(d), 1e-10);
  }
}

TEST(SharedUaf, OneParameterVectorDrivesEverySite) {
  NetworkConfig c;
  c.layer_sizes = {3, 4, 5, 2};
  c.activation = TrainableUaf{preset(PresetKind::Identity)};
  Network net(c);
  net.uaf().A = 1.3;
  net.uaf().C = 0.07;
  const ForwardPass pass = net.forward(random_matrix(6, 3, 4));
  for (std::size_t k = 0; k < pass.normalized.size(); ++k) {
    const Matrix expected =
        pass.normalized[k].unaryExpr([&](double v) { return eval_stable(net.uaf(), v); });
    EXPECT_EQ(pass.activated[k], expected) << "layer " << k;
  }
}

TEST(SharedUaf, GradientIsSumOverSites) {
  NetworkConfig c;
  c.layer_sizes = {3, 4, 5, 2};
  c.activation = TrainableUaf{kWiggly};
  Network net(c);
  const Matrix x = random_matrix(6, 3, 4);
  const Matrix y = random_matrix(6, 2, 5);
  const ForwardPass pass = net.forward(x);
  const Gradients g = net.backward(pass, y, TaskKind::Regression);

  // dL/dE is the sum of the upstream gradient at every activation site,
  // because dE/dE = 1 everywhere.
  Matrix upstream = loss_gradient(pass.output, y, TaskKind::Regression) * net.layers()[2].weights;
  double expected_e = upstream.sum();
  Matrix d_n = upstream.array() *
               pass.normalized[1].unaryExpr([&](double v) { return grad(kWiggly, v).d_x; }).array();
  upstream = d_n * net.layers()[1].weights;
  expected_e += upstream.sum();
  EXPECT_NEAR((*g.uaf)[4], expected_e, 1e-12);
}

TEST(TrainableInit, IdentityMatchesExactIdentityNetwork) {
  NetworkConfig trainable;
  trainable.layer_sizes = {5, 8, 8, 3};
  trainable.use_batch_norm = {true, false};
  trainable.seed = 99;
  trainable.activation = TrainableUaf{preset(PresetKind::Identity)};
  NetworkConfig exact = trainable;
  exact.activation = ExactActivation{PresetKind::Identity};
  const Matrix x = random_matrix(10, 5, 6);
  const Matrix a = Network(trainable).forward(x).output;
  const Matrix b = Network(exact).forward(x).output;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Losses, KnownValues) {
  const Matrix out = (Matrix(2, 2) << 1.0, 2.0, 3.0, 4.0).finished();
  const Matrix target = (Matrix(2, 2) << 1.0, 0.0, 3.0, 2.0).finished();
  EXPECT_DOUBLE_EQ(loss(out, target, TaskKind::Regression), 2.0);
  EXPECT_DOUBLE_EQ(rmse(out, target), std::sqrt(2.0));

  const Matrix logits = (Matrix(1, 2) << 0.0, 0.0).finished();
  const Matrix label = (Matrix(1, 2) << 0.0, 1.0).finished();
  EXPECT_NEAR(loss(logits, label, TaskKind::Classification), std::log(2.0), 1e-15);
  const Matrix big = (Matrix(1, 2) << 1000.0, -1000.0).finished();
  EXPECT_NEAR(loss(big, label, TaskKind::Classification), 2000.0, 1e-9);
  EXPECT_TRUE(loss_gradient(logits, label, TaskKind::Classification)
                  .isApprox((Matrix(1, 2) << 0.5, -0.5).finished()));
}

TEST(Metrics, AccuracyAndMacroF1) {
  const Matrix labels = (Matrix(4, 2) << 1, 0, 1, 0, 0, 1, 0, 1).finished();
  const Matrix scores = (Matrix(4, 2) << 0.9, 0.1, 0.2, 0.8, 0.3, 0.7, 0.4, 0.6).finished();
  EXPECT_DOUBLE_EQ(accuracy(scores, labels), 0.75);
  // class 0: tp 1, fn 1 -> F1 2/3; class 1: tp 2, fp 1 -> F1 4/5.
  EXPECT_NEAR(macro_f1(scores, labels), (2.0 / 3.0 + 0.8) / 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(macro_f1(labels, labels), 1.0);
}

TEST(Validate, RejectsBadConfigs) {
  NetworkConfig ok = small_config(TrainableUaf{kWiggly}, true);
  EXPECT_NO_THROW(validate(ok));
  auto rejects = [&](auto mutate) {
    NetworkConfig c = ok;
    mutate(c);
    EXPECT_THROW(validate(c), std::invalid_argument);
    EXPECT_THROW(Network{c}, std::invalid_argument);
  };
  rejects([](NetworkConfig& c) { c.layer_sizes = {4, 2}; });
  rejects([](NetworkConfig& c) { c.layer_sizes = {4, 0, 2}; });
  rejects([](NetworkConfig& c) { c.use_batch_norm = {true, true}; });
  rejects([](NetworkConfig& c) { c.batch_size = 0; });
  rejects([](NetworkConfig& c) { c.epochs = 0; });
  rejects([](NetworkConfig& c) { c.optimizer = Sgd{0.0}; });
  rejects([](NetworkConfig& c) { c.optimizer = Adam{1e-3, 1.0}; });
  rejects([](NetworkConfig& c) { c.bn_momentum = 1.0; });
  rejects([](NetworkConfig& c) { c.activation = TrainableUaf{{std::nan(""), 0, 0, 0, 0}}; });
}

Dataset affine_regression() {
  Dataset d;
  d.inputs = random_matrix(500, 4, 31);
  const Matrix map = random_matrix(4, 2, 32);
  d.targets = d.inputs * map;
  d.targets.rowwise() += Eigen::RowVector2d(0.3, -0.2);
  return d;
}

TEST(Train, LinearRegressionIsLearnedExactly) {
  const Dataset d = affine_regression();
  NetworkConfig c;
  c.layer_sizes = {4, 8, 2};
  c.activation = FixedUaf{preset(PresetKind::Identity)};
  c.epochs = 200;
  c.seed = 1;
  Network net(c);
  const TrainReport r = train(net, d);
  ASSERT_FALSE(r.failed);
  const RowRange rows = d.train_rows();
  const Matrix out =
      net.forward(d.inputs.middleRows(rows.begin, rows.size()), Mode::Inference).output;
  EXPECT_LT(rmse(out, d.targets.middleRows(rows.begin, rows.size())), 1e-2);
}

TEST(Train, SeparablePointClustersReachPerfectAccuracy) {
  const Dataset d = make_blobs(4, 400, 4, 8, 0.0);
  NetworkConfig c;
  c.layer_sizes = {8, 16, 4};
  c.activation = TrainableUaf{preset(PresetKind::Identity)};
  c.optimizer = Adam{1e-2};
  c.epochs = 30;
  const TrainReport r = train(c, d);
  EXPECT_EQ(r.metric_name, "accuracy");
  EXPECT_EQ(r.metric_trace.back(), 1.0);
  EXPECT_EQ(r.test_metric, 1.0);
  EXPECT_EQ(r.test_macro_f1, 1.0);
}

TEST(Train, ReportShape) {
  const Dataset d = make_gas_analogue(2, 300, 16, 3);
  NetworkConfig c;
  c.layer_sizes = {16, 6, 3};
  c.epochs = 7;
  const TrainReport trainable = train(c, d);
  EXPECT_EQ(trainable.loss_trace.size(), 7u);
  EXPECT_EQ(trainable.metric_trace.size(), 7u);
  EXPECT_EQ(trainable.metric_name, "rmse");
  ASSERT_EQ(trainable.uaf_trajectory.size(), 8u);
  EXPECT_EQ(trainable.uaf_trajectory.front().first, 0);
  EXPECT_EQ(trainable.uaf_trajectory.front().second, preset(PresetKind::Identity));
  EXPECT_EQ(trainable.uaf_trajectory.back().first, 7);
  EXPECT_FALSE(trainable.test_macro_f1.has_value());
  EXPECT_GE(trainable.wall_time, 0.0);

  c.activation = FixedUaf{preset(PresetKind::Identity)};
  EXPECT_TRUE(train(c, d).uaf_trajectory.empty());
}

TEST(Train, ZeroUafRateFreezesActivation) {
  const Dataset d = make_gas_analogue(2, 300, 16, 3);
  NetworkConfig c;
  c.layer_sizes = {16, 6, 3};
  c.epochs = 3;
  c.uaf_learning_rate = 0.0;
  const TrainReport r = train(c, d);
  for (const auto& [epoch, p] : r.uaf_trajectory) EXPECT_EQ(p, preset(PresetKind::Identity));
}

TEST(Train, DeterministicGivenSeed) {
  const Dataset d = make_blobs(8, 300, 3, 5);
  NetworkConfig c;
  c.layer_sizes = {5, 7, 3};
  c.use_batch_norm = {true};
  c.epochs = 5;
  c.seed = 1234;
  const TrainReport a = train(c, d);
  const TrainReport b = train(c, d);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.metric_trace, b.metric_trace);
  EXPECT_EQ(a.uaf_trajectory, b.uaf_trajectory);
  EXPECT_EQ(a.test_metric, b.test_metric);
  c.seed = 1235;
  EXPECT_NE(train(c, d).loss_trace, a.loss_trace);
}

TEST(Train, DivergenceIsReportedAsFailure) {
  const Dataset d = affine_regression();
  NetworkConfig c;
  c.layer_sizes = {4, 8, 2};
  c.optimizer = Sgd{1e6};
  c.epochs = 20;
  const TrainReport r = train(c, d);
  EXPECT_TRUE(r.failed);
  EXPECT_GE(r.failure_epoch, 1);
  EXPECT_EQ(r.loss_trace.size(), static_cast<std::size_t>(r.failure_epoch));
}

TEST(Train, RejectsMismatchedDataset) {
  NetworkConfig c;
  c.layer_sizes = {5, 4, 2};
  EXPECT_THROW(train(c, make_blobs(1, 100, 3, 5)), std::invalid_argument);
  EXPECT_THROW(train(c, make_blobs(1, 100, 2, 4)), std::invalid_argument);
}

}  // namespace
