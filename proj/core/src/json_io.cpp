#include "uafkit/json_io.hpp"

#include <charconv>
#include <cmath>
#include <initializer_list>
#include <set>

namespace uafkit {

std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported by name.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw SchemaError(path_, "expected an object");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      throw SchemaError(field(key), "missing required field");
    }
    return j_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) {
      throw SchemaError(field(key), "expected a number");
    }
    return v.get<double>();
  }

  double number(const std::string& key, double fallback) {
    seen_.insert(key);
    return has(key) ? number(key) : fallback;
  }

  long long integer(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_integer()) {
      throw SchemaError(field(key), "expected an integer");
    }
    return v.get<long long>();
  }

  long long integer(const std::string& key, long long fallback) {
    seen_.insert(key);
    return has(key) ? integer(key) : fallback;
  }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) {
      throw SchemaError(field(key), "expected a string");
    }
    return v.get<std::string>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    return has(key) ? string(key) : fallback;
  }

  bool boolean(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_boolean()) {
      throw SchemaError(field(key), "expected true or false");
    }
    return v.get<bool>();
  }

  const Json& array(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_array()) {
      throw SchemaError(field(key), "expected an array");
    }
    return v;
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }

  void reject_unknown() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) {
        throw SchemaError(field(key), "unknown field");
      }
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Parse>
auto wrap_invalid(const std::string& path, Parse&& parse) {
  try {
    return parse();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
}

Json number_array(const std::vector<double>& values) {
  Json arr = Json::array();
  for (double v : values) arr.push_back(v);
  return arr;
}

Json to_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

Interval interval_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw SchemaError(path, "expected [lo, hi]");
  }
  Interval out{j[0].get<double>(), j[1].get<double>()};
  wrap_invalid(path, [&] {
    validate(out);
    return 0;
  });
  return out;
}

TargetActivation target_from(ObjectReader& r, const std::string& key) {
  const std::string name = r.string(key);
  const PresetKind kind = wrap_invalid(r.field(key), [&] { return parse_preset_kind(name); });
  return TargetActivation(kind, r.number("alpha", 0.1));
}

const char* tie_form_name(Tie::Form form) {
  return form == Tie::Form::Linear ? "linear" : "reciprocal";
}

}  // namespace

Json to_json(const UafParams& p) {
  return Json{{"A", p.A}, {"B", p.B}, {"C", p.C}, {"D", p.D}, {"E", p.E}};
}

UafParams params_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  UafParams p;
  for (ParamId id : kAllParams) {
    const double v = r.number(param_name(id));
    if (!std::isfinite(v)) {
      throw SchemaError(r.field(param_name(id)), "must be finite");
    }
    p[id] = v;
  }
  r.reject_unknown();
  return p;
}

Json to_json(const Preset& p) {
  Json j{{"kind", preset_name(p.kind)}};
  if (p.kind == PresetKind::LeakyRelu) {
    j["alpha"] = p.alpha;
  }
  return j;
}

Json to_json(const ErrorReport& r) {
  Json critical = Json::array();
  for (const CriticalPoint& c : r.critical_points) {
    critical.push_back({{"x", c.x}, {"error", c.error}});
  }
  Json kinks = Json::array();
  for (const KinkPoint& k : r.kinks) {
    kinks.push_back({{"x", k.x}, {"error_left", k.error_left}, {"error_right", k.error_right}});
  }
  return Json{{"target", to_json(r.target.as_preset())},
              {"params", to_json(r.params)},
              {"interval", to_json(r.interval)},
              {"n_samples", r.n_samples},
              {"critical_points", critical},
              {"kinks", kinks},
              {"max_abs_error", r.max_abs_error},
              {"max_error_locations", number_array(r.max_error_locations)},
              {"rmse", r.rmse}};
}

Json to_json(const RmseTable& t) {
  Json rows = Json::array();
  for (const RmseRow& row : t.rows) {
    rows.push_back({{"kind", to_json(row.kind)},
                    {"rmse", row.rmse},
                    {"max_error", row.max_error},
                    {"locations", number_array(row.locations)}});
  }
  return Json{{"interval", to_json(t.interval)}, {"n_samples", t.n_samples}, {"rows", rows}};
}

Json to_json(const FitSpec& spec) {
  Json free = Json::array();
  Json ties = Json::array();
  Json constants = Json::object();
  for (ParamId id : kAllParams) {
    const ParamRole& role = spec.role(id);
    if (std::holds_alternative<Free>(role)) {
      free.push_back(param_name(id));
    } else if (const auto* c = std::get_if<Constant>(&role)) {
      constants[param_name(id)] = c->value;
    } else {
      const Tie& t = std::get<Tie>(role);
      ties.push_back({{"param", param_name(id)},
                      {"source", param_name(t.source)},
                      {"form", tie_form_name(t.form)},
                      {"scale", t.scale},
                      {"offset", t.offset}});
    }
  }
  Json j{{"target", preset_name(spec.target.kind)},
         {"method",
          spec.method == FitMethod::GradientDescent ? "gradient_descent" : "levenberg_marquardt"},
         {"init", to_json(spec.init)},
         {"free", free},
         {"ties", ties},
         {"constants", constants},
         {"interval", to_json(spec.interval)},
         {"n_samples", spec.n_samples},
         {"max_iters", spec.max_iters},
         {"learning_rate", spec.learning_rate},
         {"tolerance", spec.tolerance}};
  if (spec.target.kind == PresetKind::LeakyRelu) {
    j["alpha"] = spec.target.alpha;
  }
  return j;
}

FitSpec fit_spec_from_json(const Json& j) {
  ObjectReader r(j, "fit_spec");
  FitSpec spec;
  spec.target = target_from(r, "target");
  spec.init = params_from_json(r.raw("init"), r.field("init"));

  std::array<bool, 5> assigned{};
  auto claim = [&](ParamId id, const std::string& where) {
    auto& slot = assigned[static_cast<int>(id)];
    if (slot) {
      throw SchemaError(
          where, std::string("parameter ") + param_name(id) + " is assigned more than one role");
    }
    slot = true;
  };
  auto param_at = [&](const Json& v, const std::string& where) {
    if (!v.is_string()) throw SchemaError(where, "expected a parameter name");
    return wrap_invalid(where, [&] { return parse_param(v.get<std::string>()); });
  };

  const Json& free = r.array("free");
  for (std::size_t i = 0; i < free.size(); ++i) {
    const std::string where = r.field("free") + "[" + std::to_string(i) + "]";
    const ParamId id = param_at(free[i], where);
    claim(id, where);
    spec.role(id) = Free{};
  }
  if (r.has("ties")) {
    const Json& ties = r.array("ties");
    for (std::size_t i = 0; i < ties.size(); ++i) {
      const std::string where = r.field("ties") + "[" + std::to_string(i) + "]";
      ObjectReader t(ties[i], where);
      const ParamId id = param_at(t.raw("param"), t.field("param"));
      Tie tie;
      tie.source = param_at(t.raw("source"), t.field("source"));
      const std::string form = t.string("form", "linear");
      if (form == "linear") {
        tie.form = Tie::Form::Linear;
      } else if (form == "reciprocal") {
        tie.form = Tie::Form::Reciprocal;
      } else {
        throw SchemaError(t.field("form"), "expected 'linear' or 'reciprocal'");
      }
      tie.scale = t.number("scale", 1.0);
      tie.offset = t.number("offset", 0.0);
      t.reject_unknown();
      claim(id, where);
      spec.role(id) = tie;
    }
  }
  if (r.has("constants")) {
    const Json& constants = r.raw("constants");
    if (!constants.is_object()) throw SchemaError(r.field("constants"), "expected an object");
    for (const auto& [key, value] : constants.items()) {
      const std::string where = r.field("constants") + "." + key;
      const ParamId id = param_at(Json(key), where);
      if (!value.is_number()) throw SchemaError(where, "expected a number");
      claim(id, where);
      spec.role(id) = Constant{value.get<double>()};
    }
  }
  for (ParamId id : kAllParams) {
    if (!assigned[static_cast<int>(id)]) {
      throw SchemaError("fit_spec", std::string("parameter ") + param_name(id) +
                                        " must be listed as free, tied or constant");
    }
  }
  if (r.has("interval")) spec.interval = interval_from_json(r.raw("interval"), r.field("interval"));
  spec.n_samples = static_cast<int>(r.integer("n_samples", spec.n_samples));
  spec.max_iters = static_cast<int>(r.integer("max_iters", spec.max_iters));
  spec.learning_rate = r.number("learning_rate", spec.learning_rate);
  spec.tolerance = r.number("tolerance", spec.tolerance);
  const std::string method = r.string("method", "gradient_descent");
  if (method == "gradient_descent") {
    spec.method = FitMethod::GradientDescent;
  } else if (method == "levenberg_marquardt") {
    spec.method = FitMethod::LevenbergMarquardt;
  } else {
    throw SchemaError(r.field("method"), "expected 'gradient_descent' or 'levenberg_marquardt'");
  }
  r.reject_unknown();
  wrap_invalid("fit_spec", [&] {
    validate(spec);
    return 0;
  });
  return spec;
}

Json to_json(const FitResult& r) {
  return Json{{"params", to_json(r.params)},
              {"rmse", r.rmse},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"rmse_trace", number_array(r.rmse_trace)}};
}

FitResult fit_result_from_json(const Json& j) {
  ObjectReader r(j, "fit_result");
  FitResult out;
  out.params = params_from_json(r.raw("params"), r.field("params"));
  out.rmse = r.number("rmse");
  out.iterations = static_cast<int>(r.integer("iterations"));
  out.converged = r.boolean("converged");
  for (const Json& v : r.array("rmse_trace")) {
    if (!v.is_number()) throw SchemaError(r.field("rmse_trace"), "expected numbers");
    out.rmse_trace.push_back(v.get<double>());
  }
  r.reject_unknown();
  return out;
}

Json to_json(const NetworkConfig& c) {
  Json activation;
  if (const auto* f = std::get_if<FixedUaf>(&c.activation)) {
    activation = {{"kind", "fixed_uaf"}, {"params", to_json(f->params)}};
  } else if (const auto* e = std::get_if<ExactActivation>(&c.activation)) {
    activation = {{"kind", "exact"}, {"target", preset_name(e->target.kind)}};
    if (e->target.kind == PresetKind::LeakyRelu) activation["alpha"] = e->target.alpha;
  } else {
    activation = {{"kind", "trainable_uaf"},
                  {"init", to_json(std::get<TrainableUaf>(c.activation).init)}};
  }
  Json optimizer;
  if (const auto* s = std::get_if<Sgd>(&c.optimizer)) {
    optimizer = {{"kind", "sgd"}, {"learning_rate", s->learning_rate}};
  } else {
    const Adam& a = std::get<Adam>(c.optimizer);
    optimizer = {{"kind", "adam"},
                 {"learning_rate", a.learning_rate},
                 {"beta1", a.beta1},
                 {"beta2", a.beta2},
                 {"epsilon", a.epsilon}};
  }
  Json bn = Json::array();
  for (bool b : c.use_batch_norm) bn.push_back(b);
  return Json{
      {"layer_sizes", c.layer_sizes},
      {"activation", activation},
      {"use_batch_norm", bn},
      {"output_activation",
       c.output_activation == OutputActivation::Identity ? "identity" : "none"},
      {"seed", c.seed},
      {"optimizer", optimizer},
      {"uaf_learning_rate", c.uaf_learning_rate ? Json(*c.uaf_learning_rate) : Json(nullptr)},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"bn_momentum", c.bn_momentum},
      {"bn_epsilon", c.bn_epsilon}};
}

NetworkConfig network_config_from_json(const Json& j) {
  ObjectReader r(j, "network_config");
  NetworkConfig c;
  for (const Json& v : r.array("layer_sizes")) {
    if (!v.is_number_integer()) throw SchemaError(r.field("layer_sizes"), "expected integers");
    c.layer_sizes.push_back(v.get<int>());
  }

  if (r.has("activation")) {
    const std::string path = r.field("activation");
    ObjectReader a(r.raw("activation"), path);
    const std::string kind = a.string("kind");
    auto params_or_preset = [&](const std::string& key) {
      if (a.has("preset")) {
        const std::string name = a.string("preset");
        const PresetKind pk =
            wrap_invalid(a.field("preset"), [&] { return parse_preset_kind(name); });
        const double alpha = a.number("alpha", 0.1);
        return wrap_invalid(a.field("alpha"), [&] { return preset(Preset{pk, alpha}); });
      }
      return params_from_json(a.raw(key), a.field(key));
    };
    if (kind == "fixed_uaf") {
      c.activation = FixedUaf{params_or_preset("params")};
    } else if (kind == "trainable_uaf") {
      c.activation = TrainableUaf{params_or_preset("init")};
    } else if (kind == "exact") {
      c.activation = ExactActivation{target_from(a, "target")};
    } else {
      throw SchemaError(a.field("kind"), "expected fixed_uaf, trainable_uaf or exact");
    }
    a.reject_unknown();
  }

  if (r.has("use_batch_norm")) {
    for (const Json& v : r.array("use_batch_norm")) {
      if (!v.is_boolean()) throw SchemaError(r.field("use_batch_norm"), "expected booleans");
      c.use_batch_norm.push_back(v.get<bool>());
    }
  }
  const std::string out = r.string("output_activation", "identity");
  if (out == "identity") {
    c.output_activation = OutputActivation::Identity;
  } else if (out == "none") {
    c.output_activation = OutputActivation::None;
  } else {
    throw SchemaError(r.field("output_activation"), "expected 'identity' or 'none'");
  }
  const long long seed = r.integer("seed", 0);
  if (seed < 0) throw SchemaError(r.field("seed"), "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);

  if (r.has("optimizer")) {
    ObjectReader o(r.raw("optimizer"), r.field("optimizer"));
    const std::string kind = o.string("kind");
    if (kind == "sgd") {
      c.optimizer = Sgd{o.number("learning_rate", Sgd{}.learning_rate)};
    } else if (kind == "adam") {
      Adam a;
      a.learning_rate = o.number("learning_rate", a.learning_rate);
      a.beta1 = o.number("beta1", a.beta1);
      a.beta2 = o.number("beta2", a.beta2);
      a.epsilon = o.number("epsilon", a.epsilon);
      c.optimizer = a;
    } else {
      throw SchemaError(o.field("kind"), "expected 'sgd' or 'adam'");
    }
    o.reject_unknown();
  }
  if (r.has("uaf_learning_rate")) {
    c.uaf_learning_rate = r.number("uaf_learning_rate");
  } else {
    r.number("uaf_learning_rate", 0.0);
  }
  c.batch_size = static_cast<int>(r.integer("batch_size", c.batch_size));
  c.epochs = static_cast<int>(r.integer("epochs", c.epochs));
  c.bn_momentum = r.number("bn_momentum", c.bn_momentum);
  c.bn_epsilon = r.number("bn_epsilon", c.bn_epsilon);
  r.reject_unknown();
  wrap_invalid("network_config", [&] {
    validate(c);
    return 0;
  });
  return c;
}

Json to_json(const TrainReport& r) {
  Json trajectory = Json::array();
  for (const auto& [epoch, params] : r.uaf_trajectory) {
    Json entry = to_json(params);
    entry["epoch"] = epoch;
    trajectory.push_back(entry);
  }
  Json j{{"loss_trace", number_array(r.loss_trace)},
         {"metric_name", r.metric_name},
         {"metric_trace", number_array(r.metric_trace)},
         {"uaf_trajectory", trajectory},
         {"test_metric", r.test_metric},
         {"failed", r.failed},
         {"failure_epoch", r.failed ? Json(r.failure_epoch) : Json(nullptr)},
         {"wall_time", r.wall_time}};
  if (r.test_macro_f1) j["test_macro_f1"] = *r.test_macro_f1;
  return j;
}

void write_trajectory_csv(std::ostream& out, const TrainReport& r) {
  out << "epoch,loss,metric,A,B,C,D,E\n";
  for (std::size_t i = 0; i < r.loss_trace.size(); ++i) {
    const int epoch = static_cast<int>(i) + 1;
    out << epoch << ',' << format_double(r.loss_trace[i]) << ',';
    if (i < r.metric_trace.size()) out << format_double(r.metric_trace[i]);
    bool found = false;
    for (const auto& [e, p] : r.uaf_trajectory) {
      if (e == epoch) {
        out << ',' << format_double(p.A) << ',' << format_double(p.B) << ',' << format_double(p.C)
            << ',' << format_double(p.D) << ',' << format_double(p.E);
        found = true;
        break;
      }
    }
    if (!found) out << ",,,,,";
    out << '\n';
  }
}

}  // namespace uafkit
