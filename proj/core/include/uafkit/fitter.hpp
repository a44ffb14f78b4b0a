#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "uafkit/analysis.hpp"
#include "uafkit/targets.hpp"
#include "uafkit/uaf.hpp"

namespace uafkit {

/// A non-free parameter expressed through a free one:
///   Linear:     value = scale * source + offset
///   Reciprocal: value = scale / source + offset
struct Tie {
  enum class Form { Linear, Reciprocal };

  ParamId source = ParamId::A;
  Form form = Form::Linear;
  double scale = 1.0;
  double offset = 0.0;

  double value(double source_value) const;
  double derivative(double source_value) const;

  static Tie equal_to(ParamId src) { return {src, Form::Linear, 1.0, 0.0}; }
  static Tie shifted(ParamId src, double offset) { return {src, Form::Linear, 1.0, offset}; }
  static Tie reciprocal(ParamId src, double scale = 1.0) {
    return {src, Form::Reciprocal, scale, 0.0};
  }
};

struct Free {};
struct Constant {
  double value = 0.0;
};
using ParamRole = std::variant<Free, Constant, Tie>;

/// GradientDescent: the guarded descent described on fit().
/// LevenbergMarquardt: damped Gauss-Newton steps on the same residuals, with
/// the same accept/revert rule; needed when several parameters are free and
/// the RMSE surface is badly conditioned.
enum class FitMethod { GradientDescent, LevenbergMarquardt };

struct FitSpec {
  TargetActivation target;
  FitMethod method = FitMethod::GradientDescent;
  std::array<ParamRole, 5> roles{Free{}, Free{}, Free{}, Free{}, Free{}};
  UafParams init;
  Interval interval;
  int n_samples = kDefaultSamples;
  int max_iters = 100000;
  double learning_rate = 0.1;
  double tolerance = 1e-12;

  ParamRole& role(ParamId id) { return roles[static_cast<int>(id)]; }
  const ParamRole& role(ParamId id) const { return roles[static_cast<int>(id)]; }
};

struct FitResult {
  UafParams params;
  double rmse = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> rmse_trace;
};

/// Throws std::invalid_argument naming the first violated constraint.
void validate(const FitSpec& spec);

/// Applies constants and ties to the free values in `params`.
UafParams resolve_ties(const FitSpec& spec, UafParams params);

/// Gradient descent on grid RMSE over the free parameters, with gradients
/// pulled through the ties. A step that raises the RMSE is reverted and the
/// rate halved; an accepted step grows the rate by 1.1, capped at 10x the
/// initial rate. Stops once an accepted step improves by less than
/// `tolerance`, the rate collapses, or the starting RMSE is already below
/// `tolerance` (reported as converged after zero iterations).
FitResult fit(const FitSpec& spec);

/// All five parameters free, solved with Levenberg-Marquardt.
FitResult fit_free(const TargetActivation& target, const UafParams& init, Interval interval = {},
                   int max_iters = 100000);

/// sigmoid-family, tanh-family, gaussian-family, relu-family.
FitSpec builtin_fit_spec(const std::string& name);
std::vector<std::string> builtin_fit_spec_names();

}  // namespace uafkit
