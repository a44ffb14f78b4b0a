#include "uafkit/fitter.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <stdexcept>

namespace uafkit {

double Tie::value(double source_value) const {
  return form == Form::Linear ? scale * source_value + offset : scale / source_value + offset;
}

double Tie::derivative(double source_value) const {
  return form == Form::Linear ? scale : -scale / (source_value * source_value);
}

void validate(const FitSpec& spec) {
  validate(spec.interval);
  if (spec.n_samples < 2) {
    throw std::invalid_argument("n_samples must be at least 2");
  }
  if (!(spec.learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (spec.max_iters < 0) {
    throw std::invalid_argument("max_iters must be non-negative");
  }
  if (!spec.init.is_finite()) {
    throw std::invalid_argument("init parameters must be finite");
  }
  if (spec.target.kind == PresetKind::LeakyRelu &&
      !(spec.target.alpha > 0.0 && spec.target.alpha <= 0.1)) {
    throw std::invalid_argument("leaky_relu alpha must lie in (0, 0.1]");
  }
  bool any_free = false;
  for (ParamId id : kAllParams) {
    const ParamRole& r = spec.role(id);
    if (std::holds_alternative<Free>(r)) {
      any_free = true;
    } else if (const auto* c = std::get_if<Constant>(&r); c && !std::isfinite(c->value)) {
      throw std::invalid_argument(std::string("constant for ") + param_name(id) +
                                  " must be finite");
    } else if (const auto* tie = std::get_if<Tie>(&r)) {
      if (!std::holds_alternative<Free>(spec.role(tie->source))) {
        throw std::invalid_argument(std::string("tie for ") + param_name(id) +
                                    " must reference a free parameter, " + param_name(tie->source) +
                                    " is not free");
      }
      if (!std::isfinite(tie->scale) || !std::isfinite(tie->offset)) {
        throw std::invalid_argument(std::string("tie for ") + param_name(id) +
                                    " has a non-finite coefficient");
      }
    }
  }
  if (!any_free) {
    throw std::invalid_argument("at least one parameter must be free");
  }
}

UafParams resolve_ties(const FitSpec& spec, UafParams params) {
  for (ParamId id : kAllParams) {
    const ParamRole& r = spec.role(id);
    if (const auto* c = std::get_if<Constant>(&r)) {
      params[id] = c->value;
    } else if (const auto* tie = std::get_if<Tie>(&r)) {
      params[id] = tie->value(params[tie->source]);
    }
  }
  return params;
}

namespace {

// Residuals e_i = f(x_i) - target(x_i) on the fixed grid, with derivatives
// taken w.r.t. the free parameters (ties folded in by the chain rule).
class Problem {
 public:
  explicit Problem(const FitSpec& spec) : spec_(spec) {
    const double h = (spec.interval.hi - spec.interval.lo) / (spec.n_samples - 1);
    xs_.reserve(spec.n_samples);
    targets_.reserve(spec.n_samples);
    for (int i = 0; i < spec.n_samples; ++i) {
      const double x = i == spec.n_samples - 1 ? spec.interval.hi : spec.interval.lo + i * h;
      xs_.push_back(x);
      targets_.push_back(target_eval(spec.target, x));
    }
    for (ParamId id : kAllParams) {
      if (std::holds_alternative<Free>(spec.role(id))) free_.push_back(id);
    }
  }

  const std::vector<ParamId>& free() const { return free_; }

  double rmse(const UafParams& p) const {
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      const double e = eval_stable(p, xs_[i]) - targets_[i];
      sum_sq += e * e;
    }
    return std::sqrt(sum_sq / static_cast<double>(xs_.size()));
  }

  struct Linearization {
    double rmse = 0.0;
    Eigen::VectorXd gradient;  // d rmse / d free
    Eigen::MatrixXd jtj;       // J^T J / n
    Eigen::VectorXd jtr;       // J^T r / n
  };

  Linearization linearize(const UafParams& p) const {
    const auto k = static_cast<Eigen::Index>(free_.size());
    Linearization out;
    out.jtj = Eigen::MatrixXd::Zero(k, k);
    out.jtr = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd row(k);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      const double e = eval_stable(p, xs_[i]) - targets_[i];
      sum_sq += e * e;
      const UafGradient g = grad(p, xs_[i]);
      row.setZero();
      for (ParamId id : kAllParams) {
        const ParamRole& r = spec_.role(id);
        if (std::holds_alternative<Free>(r)) {
          row(index_of(id)) += g.wrt(id);
        } else if (const auto* tie = std::get_if<Tie>(&r)) {
          row(index_of(tie->source)) += g.wrt(id) * tie->derivative(p[tie->source]);
        }
      }
      out.jtr += e * row;
      out.jtj.noalias() += row * row.transpose();
    }
    const double n = static_cast<double>(xs_.size());
    out.jtr /= n;
    out.jtj /= n;
    out.rmse = std::sqrt(sum_sq / n);
    out.gradient = out.rmse > 0.0 ? Eigen::VectorXd(out.jtr / out.rmse) : Eigen::VectorXd::Zero(k);
    return out;
  }

  UafParams apply(const UafParams& p, const Eigen::VectorXd& delta) const {
    UafParams out = p;
    for (std::size_t j = 0; j < free_.size(); ++j) {
      out[free_[j]] += delta(static_cast<Eigen::Index>(j));
    }
    return resolve_ties(spec_, out);
  }

 private:
  Eigen::Index index_of(ParamId id) const {
    return std::find(free_.begin(), free_.end(), id) - free_.begin();
  }

  const FitSpec& spec_;
  std::vector<double> xs_;
  std::vector<double> targets_;
  std::vector<ParamId> free_;
};

// Step proposal for the current iterate; `adapt(accepted)` moves the step
// control after the trial is judged.
class GradientStep {
 public:
  explicit GradientStep(double rate) : initial_(rate), rate_(rate) {}

  Eigen::VectorXd propose(const Problem::Linearization& lin) const { return -rate_ * lin.gradient; }
  void adapt(bool accepted) {
    rate_ = accepted ? std::min(rate_ * 1.1, 10.0 * initial_) : rate_ * 0.5;
  }
  bool exhausted() const { return rate_ < initial_ * 1e-30; }

 private:
  double initial_;
  double rate_;
};

class MarquardtStep {
 public:
  Eigen::VectorXd propose(const Problem::Linearization& lin) const {
    Eigen::MatrixXd system = lin.jtj;
    const double floor = 1e-12 * std::max(1.0, lin.jtj.diagonal().maxCoeff());
    for (Eigen::Index i = 0; i < system.rows(); ++i) {
      system(i, i) += damping_ * std::max(lin.jtj(i, i), floor);
    }
    return -system.ldlt().solve(lin.jtr);
  }
  void adapt(bool accepted) {
    damping_ = accepted ? std::max(damping_ * 0.5, 1e-12) : damping_ * 2.0;
  }
  bool exhausted() const { return damping_ > 1e16; }

 private:
  double damping_ = 1e-3;
};

template <typename Step>
FitResult descend(const FitSpec& spec, const Problem& problem, Step step) {
  UafParams current = resolve_ties(spec, spec.init);
  auto lin = problem.linearize(current);

  FitResult result;
  result.rmse_trace.push_back(lin.rmse);
  // Nothing left to gain once the RMSE itself is below the stopping tolerance.
  if (lin.rmse < spec.tolerance) {
    result.params = current;
    result.rmse = lin.rmse;
    result.converged = true;
    return result;
  }

  while (result.iterations < spec.max_iters) {
    ++result.iterations;
    const UafParams trial = problem.apply(current, step.propose(lin));
    const double trial_rmse = trial.is_finite() ? problem.rmse(trial) : HUGE_VAL;
    const bool accepted = std::isfinite(trial_rmse) && trial_rmse <= lin.rmse;
    step.adapt(accepted);
    if (accepted) {
      const double improvement = lin.rmse - trial_rmse;
      current = trial;
      lin = problem.linearize(current);
      result.rmse_trace.push_back(lin.rmse);
      if (improvement < spec.tolerance || lin.rmse == 0.0) {
        result.converged = true;
        break;
      }
    } else if (step.exhausted()) {
      result.converged = true;
      break;
    }
  }
  result.params = current;
  result.rmse = lin.rmse;
  return result;
}

}  // namespace

FitResult fit(const FitSpec& spec) {
  validate(spec);
  const Problem problem(spec);
  if (spec.method == FitMethod::LevenbergMarquardt) {
    return descend(spec, problem, MarquardtStep{});
  }
  return descend(spec, problem, GradientStep{spec.learning_rate});
}

FitResult fit_free(const TargetActivation& target, const UafParams& init, Interval interval,
                   int max_iters) {
  FitSpec spec;
  spec.target = target;
  spec.init = init;
  spec.interval = interval;
  spec.max_iters = max_iters;
  spec.method = FitMethod::LevenbergMarquardt;
  return fit(spec);
}

std::vector<std::string> builtin_fit_spec_names() {
  return {"sigmoid-family", "tanh-family", "gaussian-family", "relu-family"};
}

FitSpec builtin_fit_spec(const std::string& name) {
  FitSpec spec;
  if (name == "sigmoid-family") {
    spec.target = PresetKind::Sigmoid;
    spec.init = {1.0, 0.0, 0.0, 0.0, 0.0};
    spec.roles = {Free{}, Tie::reciprocal(ParamId::A, 0.5), Constant{0.0},
                  Tie::equal_to(ParamId::A), Constant{0.0}};
  } else if (name == "tanh-family") {
    spec.target = PresetKind::Tanh;
    spec.init = {2.0, 0.0, 0.0, 0.0, 0.0};
    spec.roles = {Free{}, Tie::reciprocal(ParamId::A), Constant{0.0}, Tie::equal_to(ParamId::A),
                  Constant{-1.0}};
  } else if (name == "gaussian-family") {
    spec.target = PresetKind::Gaussian;
    spec.init = {0.0, 0.0, -0.5, 0.0, 0.0};
    spec.roles = {Constant{0.0}, Constant{0.0}, Free{}, Constant{0.0}, Constant{kLn2}};
  } else if (name == "relu-family") {
    // RMSE keeps falling as A grows, so this one runs to max_iters.
    spec.target = PresetKind::Relu;
    spec.init = {10.0, 0.0, 0.0, 0.0, 0.0};
    spec.roles = {Free{}, Constant{0.0}, Constant{0.0}, Tie::shifted(ParamId::A, -1.0),
                  Constant{0.0}};
    spec.max_iters = 2000;
  } else {
    throw std::invalid_argument("unknown built-in fit spec '" + name + "'");
  }
  spec.init = resolve_ties(spec, spec.init);
  return spec;
}

}  // namespace uafkit
