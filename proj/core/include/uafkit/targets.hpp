#pragma once

#include "uafkit/uaf.hpp"

namespace uafkit {

/// The exact activation that a preset approximates. Gaussian means the
/// ln(2)-scaled bell H(x) = ln(2) e^{-x^2/2}.
struct TargetActivation {
  PresetKind kind = PresetKind::Identity;
  double alpha = 0.1;  // LeakyRelu only

  TargetActivation() = default;
  TargetActivation(PresetKind k) : kind(k) {}  // NOLINT(google-explicit-constructor)
  TargetActivation(PresetKind k, double a) : kind(k), alpha(a) {}
  explicit TargetActivation(Preset p) : kind(p.kind), alpha(p.alpha) {}

  Preset as_preset() const { return {kind, alpha}; }

  friend bool operator==(const TargetActivation&, const TargetActivation&) = default;
};

/// Which one-sided derivative to take at a kink.
enum class Side { Left, Right };

double target_eval(const TargetActivation& t, double x);

/// Derivative of the target. At x == 0 the Step/Relu/LeakyRelu kinks use the
/// requested one-sided value (Step reports 0 on both sides).
double target_derivative(const TargetActivation& t, double x, Side side = Side::Right);

/// True for targets that are not differentiable at the origin.
bool has_kink_at_origin(const TargetActivation& t);

/// True for targets with a jump at the origin (Step only).
bool has_jump_at_origin(const TargetActivation& t);

/// One-sided limits of the target at 0.
double target_limit_at_origin(const TargetActivation& t, Side side);

/// f_uaf(x) - f_act(x).
double approx_error(const UafParams& p, const TargetActivation& t, double x);

/// Derivative of approx_error w.r.t. x, analytic on both terms.
double approx_error_derivative(const UafParams& p, const TargetActivation& t, double x,
                               Side side = Side::Right);

}  // namespace uafkit
