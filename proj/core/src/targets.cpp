#include "uafkit/targets.hpp"

namespace uafkit {

double target_eval(const TargetActivation& t, double x) {
  switch (t.kind) {
    case PresetKind::Identity:
      return x;
    case PresetKind::Step:
      if (x > 0.0) return 1.0;
      if (x < 0.0) return 0.0;
      return 0.5;
    case PresetKind::Sigmoid:
      return logistic(x);
    case PresetKind::Tanh:
      return std::tanh(x);
    case PresetKind::Relu:
      return std::max(x, 0.0);
    case PresetKind::LeakyRelu:
      return x >= 0.0 ? x : t.alpha * x;
    case PresetKind::Softplus:
      return softplus(x);
    case PresetKind::Gaussian:
      return kLn2 * std::exp(-0.5 * x * x);
  }
  throw std::invalid_argument("bad target kind");
}

double target_derivative(const TargetActivation& t, double x, Side side) {
  const bool right = x > 0.0 || (x == 0.0 && side == Side::Right);
  switch (t.kind) {
    case PresetKind::Identity:
      return 1.0;
    case PresetKind::Step:
      return 0.0;
    case PresetKind::Sigmoid: {
      const double s = logistic(x);
      return s * (1.0 - s);
    }
    case PresetKind::Tanh: {
      const double c = std::cosh(x);
      return 1.0 / (c * c);
    }
    case PresetKind::Relu:
      return right ? 1.0 : 0.0;
    case PresetKind::LeakyRelu:
      return right ? 1.0 : t.alpha;
    case PresetKind::Softplus:
      return logistic(x);
    case PresetKind::Gaussian:
      return -x * kLn2 * std::exp(-0.5 * x * x);
  }
  throw std::invalid_argument("bad target kind");
}

bool has_kink_at_origin(const TargetActivation& t) {
  return t.kind == PresetKind::Step || t.kind == PresetKind::Relu ||
         t.kind == PresetKind::LeakyRelu;
}

bool has_jump_at_origin(const TargetActivation& t) { return t.kind == PresetKind::Step; }

double target_limit_at_origin(const TargetActivation& t, Side side) {
  if (t.kind == PresetKind::Step) {
    return side == Side::Right ? 1.0 : 0.0;
  }
  return target_eval(t, 0.0);
}

double approx_error(const UafParams& p, const TargetActivation& t, double x) {
  return eval_stable(p, x) - target_eval(t, x);
}

double approx_error_derivative(const UafParams& p, const TargetActivation& t, double x, Side side) {
  return grad(p, x).d_x - target_derivative(t, x, side);
}

}  // namespace uafkit
