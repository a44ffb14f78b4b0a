#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "uafkit/json_io.hpp"

namespace {

using namespace uafkit;

std::string path_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<no error>";
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-1.0), "-1");
  EXPECT_EQ(format_double(0.0), "0");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> exponent(-300, 300);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(mantissa(rng), exponent(rng));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(ParamsJson, RoundTripIsBitwise) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const UafParams p{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const Json parsed = Json::parse(to_json(p).dump());
    EXPECT_EQ(params_from_json(parsed), p);
  }
}

TEST(ParamsJson, SchemaErrorsNameTheField) {
  const Json missing = Json::parse(R"({"A":1,"B":0,"C":0,"D":-1})");
  EXPECT_EQ(path_of([&] { params_from_json(missing); }), "params.E");
  const Json wrong_type = Json::parse(R"({"A":"one","B":0,"C":0,"D":-1,"E":0})");
  EXPECT_EQ(path_of([&] { params_from_json(wrong_type); }), "params.A");
  const Json extra = Json::parse(R"({"A":1,"B":0,"C":0,"D":-1,"E":0,"F":2})");
  EXPECT_EQ(path_of([&] { params_from_json(extra); }), "params.F");
  EXPECT_EQ(path_of([&] { params_from_json(Json::array()); }), "params");
}

TEST(FitSpecJson, BuiltinsRoundTrip) {
  for (const std::string& name : builtin_fit_spec_names()) {
    FitSpec spec = builtin_fit_spec(name);
    spec.method = FitMethod::LevenbergMarquardt;
    const Json j = to_json(spec);
    const FitSpec back = fit_spec_from_json(Json::parse(j.dump()));
    EXPECT_EQ(to_json(back), j) << name;
    EXPECT_EQ(back.init, spec.init);
    EXPECT_EQ(back.target, spec.target);
    EXPECT_EQ(back.interval, spec.interval);
    EXPECT_EQ(back.method, spec.method);
    EXPECT_EQ(resolve_ties(back, {1.7, 2.0, 3.0, 4.0, 5.0}),
              resolve_ties(spec, {1.7, 2.0, 3.0, 4.0, 5.0}));
  }
}

TEST(FitSpecJson, DefaultsApplyToOptionalFields) {
  const Json j = Json::parse(R"({
    "target": "sigmoid",
    "init": {"A":1,"B":0.5,"C":0,"D":1,"E":0},
    "free": ["A"],
    "ties": [{"param":"B","source":"A","form":"reciprocal","scale":0.5},
             {"param":"D","source":"A"}],
    "constants": {"C":0,"E":0}
  })");
  const FitSpec spec = fit_spec_from_json(j);
  const FitSpec defaults;
  EXPECT_EQ(spec.method, FitMethod::GradientDescent);
  EXPECT_EQ(spec.n_samples, defaults.n_samples);
  EXPECT_EQ(spec.max_iters, defaults.max_iters);
  EXPECT_EQ(spec.interval, defaults.interval);
  EXPECT_EQ(resolve_ties(spec, {2.0, 0, 0, 0, 0}), (UafParams{2.0, 0.25, 0.0, 2.0, 0.0}));
}

TEST(FitSpecJson, SchemaErrorsNameTheField) {
  Json base = to_json(builtin_fit_spec("sigmoid-family"));

  Json bad_target = base;
  bad_target["target"] = "swish";
  EXPECT_EQ(path_of([&] { fit_spec_from_json(bad_target); }), "fit_spec.target");

  Json bad_method = base;
  bad_method["method"] = "newton";
  EXPECT_EQ(path_of([&] { fit_spec_from_json(bad_method); }), "fit_spec.method");

  Json unknown = base;
  unknown["momentum"] = 0.9;
  EXPECT_EQ(path_of([&] { fit_spec_from_json(unknown); }), "fit_spec.momentum");

  Json bad_free = base;
  bad_free["free"] = Json::array({"Q"});
  EXPECT_EQ(path_of([&] { fit_spec_from_json(bad_free); }), "fit_spec.free[0]");

  Json twice = base;
  twice["free"] = Json::array({"A", "C"});
  EXPECT_EQ(path_of([&] { fit_spec_from_json(twice); }), "fit_spec.constants.C");

  Json unassigned = base;
  unassigned["constants"].erase("E");
  EXPECT_EQ(path_of([&] { fit_spec_from_json(unassigned); }), "fit_spec");

  Json bad_interval = base;
  bad_interval["interval"] = Json::array({1.0, -1.0});
  EXPECT_EQ(path_of([&] { fit_spec_from_json(bad_interval); }), "fit_spec.interval");

  Json bad_form = base;
  bad_form["ties"][0]["form"] = "cubic";
  EXPECT_EQ(path_of([&] { fit_spec_from_json(bad_form); }), "fit_spec.ties[0].form");
}

TEST(FitResultJson, RoundTripIsBitwise) {
  const FitResult r = fit(builtin_fit_spec("tanh-family"));
  const FitResult back = fit_result_from_json(Json::parse(to_json(r).dump()));
  EXPECT_EQ(back.params, r.params);
  EXPECT_EQ(back.rmse, r.rmse);
  EXPECT_EQ(back.iterations, r.iterations);
  EXPECT_EQ(back.converged, r.converged);
  EXPECT_EQ(back.rmse_trace, r.rmse_trace);
}

TEST(NetworkConfigJson, RoundTrip) {
  NetworkConfig c;
  c.layer_sizes = {64, 100, 50, 9};
  c.activation = TrainableUaf{{1.25, 0.1, -0.3, -0.9, 0.01}};
  c.use_batch_norm = {true, false};
  c.output_activation = OutputActivation::None;
  c.seed = 123456789012345ULL;
  c.optimizer = Adam{3e-4, 0.85, 0.995, 1e-7};
  c.uaf_learning_rate = 1e-4;
  c.batch_size = 16;
  c.epochs = 7;
  c.bn_momentum = 0.8;
  c.bn_epsilon = 1e-6;
  const Json j = to_json(c);
  const NetworkConfig back = network_config_from_json(Json::parse(j.dump()));
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.layer_sizes, c.layer_sizes);
  EXPECT_EQ(std::get<TrainableUaf>(back.activation).init,
            std::get<TrainableUaf>(c.activation).init);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.uaf_learning_rate, c.uaf_learning_rate);

  NetworkConfig fixed = c;
  fixed.activation = FixedUaf{preset(PresetKind::Tanh)};
  fixed.optimizer = Sgd{0.05};
  fixed.uaf_learning_rate.reset();
  EXPECT_EQ(to_json(network_config_from_json(to_json(fixed))), to_json(fixed));

  NetworkConfig exact = c;
  exact.activation = ExactActivation{TargetActivation(PresetKind::LeakyRelu, 0.2)};
  const NetworkConfig exact_back = network_config_from_json(to_json(exact));
  EXPECT_EQ(std::get<ExactActivation>(exact_back.activation).target,
            TargetActivation(PresetKind::LeakyRelu, 0.2));
}

TEST(NetworkConfigJson, PresetShorthandAndDefaults) {
  const Json j = Json::parse(R"({
    "layer_sizes": [16, 32, 4],
    "activation": {"kind": "fixed_uaf", "preset": "sigmoid"},
    "use_batch_norm": [true]
  })");
  const NetworkConfig c = network_config_from_json(j);
  EXPECT_EQ(std::get<FixedUaf>(c.activation).params, preset(PresetKind::Sigmoid));
  EXPECT_TRUE(std::holds_alternative<Adam>(c.optimizer));
  EXPECT_EQ(c.epochs, 50);
  EXPECT_EQ(c.batch_size, 32);
  EXPECT_FALSE(c.uaf_learning_rate.has_value());
}

TEST(NetworkConfigJson, SchemaErrorsNameTheField) {
  const Json base = Json::parse(R"({"layer_sizes": [4, 3, 2], "use_batch_norm": [false]})");
  EXPECT_NO_THROW(network_config_from_json(base));

  Json sizes = base;
  sizes["layer_sizes"] = Json::array({4, 2.5, 2});
  EXPECT_EQ(path_of([&] { network_config_from_json(sizes); }), "network_config.layer_sizes");

  Json kind = base;
  kind["activation"] = {{"kind", "swish"}};
  EXPECT_EQ(path_of([&] { network_config_from_json(kind); }), "network_config.activation.kind");

  Json opt = base;
  opt["optimizer"] = {{"kind", "adam"}, {"lr", 0.1}};
  EXPECT_EQ(path_of([&] { network_config_from_json(opt); }), "network_config.optimizer.lr");

  Json seed = base;
  seed["seed"] = -1;
  EXPECT_EQ(path_of([&] { network_config_from_json(seed); }), "network_config.seed");

  Json unknown = base;
  unknown["dropout"] = 0.5;
  EXPECT_EQ(path_of([&] { network_config_from_json(unknown); }), "network_config.dropout");

  Json invalid = base;
  invalid["epochs"] = 0;
  EXPECT_THROW(network_config_from_json(invalid), SchemaError);
}

TEST(TrainReportCsv, HeaderAndColumns) {
  TrainReport r;
  r.loss_trace = {0.5, 0.25};
  r.metric_trace = {0.4, 0.3};
  r.uaf_trajectory = {{0, preset(PresetKind::Identity)},
                      {1, {1.5, 0.0, 0.0, -1.0, 0.0}},
                      {2, {1.25, 0.0, 0.0, -1.0, 0.0}}};
  std::ostringstream out;
  write_trajectory_csv(out, r);
  EXPECT_EQ(out.str(),
            "epoch,loss,metric,A,B,C,D,E\n"
            "1,0.5,0.4,1.5,0,0,-1,0\n"
            "2,0.25,0.3,1.25,0,0,-1,0\n");

  r.uaf_trajectory.clear();
  std::ostringstream fixed;
  write_trajectory_csv(fixed, r);
  EXPECT_EQ(fixed.str(),
            "epoch,loss,metric,A,B,C,D,E\n"
            "1,0.5,0.4,,,,,\n"
            "2,0.25,0.3,,,,,\n");
}

TEST(TrainReportJson, FieldsPresent) {
  TrainReport r;
  r.loss_trace = {1.0};
  r.metric_trace = {0.5};
  r.metric_name = "accuracy";
  r.test_macro_f1 = 0.75;
  const Json j = to_json(r);
  EXPECT_EQ(j["metric_name"], "accuracy");
  EXPECT_TRUE(j["failure_epoch"].is_null());
  EXPECT_EQ(j["test_macro_f1"].get<double>(), 0.75);
  EXPECT_FALSE(j["failed"].get<bool>());
}

TEST(ReportJson, CarriesCriticalPoints) {
  const ErrorReport rep = error_report(preset(PresetKind::Tanh), PresetKind::Tanh, Interval{});
  const Json j = to_json(rep);
  EXPECT_EQ(j["target"]["kind"], "tanh");
  EXPECT_EQ(j["critical_points"].size(), rep.critical_points.size());
  EXPECT_EQ(j["max_abs_error"].get<double>(), rep.max_abs_error);
}

}  // namespace
