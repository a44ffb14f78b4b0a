#include "uafkit/uaf.hpp"

#include <algorithm>

namespace uafkit {

const char* param_name(ParamId id) {
  switch (id) {
    case ParamId::A:
      return "A";
    case ParamId::B:
      return "B";
    case ParamId::C:
      return "C";
    case ParamId::D:
      return "D";
    case ParamId::E:
      return "E";
  }
  return "?";
}

ParamId parse_param(const std::string& name) {
  for (ParamId id : kAllParams) {
    if (name == param_name(id)) {
      return id;
    }
  }
  throw std::invalid_argument("unknown UAF parameter '" + name + "'");
}

double& UafParams::operator[](ParamId id) {
  switch (id) {
    case ParamId::A:
      return A;
    case ParamId::B:
      return B;
    case ParamId::C:
      return C;
    case ParamId::D:
      return D;
    case ParamId::E:
      return E;
  }
  throw std::invalid_argument("bad ParamId");
}

double UafParams::operator[](ParamId id) const { return const_cast<UafParams&>(*this)[id]; }

bool UafParams::is_finite() const {
  return std::isfinite(A) && std::isfinite(B) && std::isfinite(C) && std::isfinite(D) &&
         std::isfinite(E);
}

double UafGradient::wrt(ParamId id) const {
  switch (id) {
    case ParamId::A:
      return d_A;
    case ParamId::B:
      return d_B;
    case ParamId::C:
      return d_C;
    case ParamId::D:
      return d_D;
    case ParamId::E:
      return d_E;
  }
  return 0.0;
}

const char* preset_name(PresetKind kind) {
  switch (kind) {
    case PresetKind::Identity:
      return "identity";
    case PresetKind::Step:
      return "step";
    case PresetKind::Sigmoid:
      return "sigmoid";
    case PresetKind::Tanh:
      return "tanh";
    case PresetKind::Relu:
      return "relu";
    case PresetKind::LeakyRelu:
      return "leaky_relu";
    case PresetKind::Softplus:
      return "softplus";
    case PresetKind::Gaussian:
      return "gaussian";
  }
  return "?";
}

PresetKind parse_preset_kind(const std::string& name) {
  for (PresetKind kind : kAllPresetKinds) {
    if (name == preset_name(kind)) {
      return kind;
    }
  }
  throw std::invalid_argument("unknown activation kind '" + name + "'");
}

namespace {

struct Exponents {
  double rising;   // A(x+B) + Cx^2
  double falling;  // D(x-B)
};

Exponents exponents(const UafParams& p, double x) {
  return {p.A * (x + p.B) + p.C * x * x, p.D * (x - p.B)};
}

}  // namespace

double eval_naive(const UafParams& p, double x) {
  const auto [z1, z2] = exponents(p, x);
  if (!(z1 <= kNaiveExpLimit) || !(z2 <= kNaiveExpLimit)) {
    throw OverflowError("eval_naive: exponent argument exceeds " + std::to_string(kNaiveExpLimit));
  }
  return std::log(1.0 + std::exp(z1)) - std::log(1.0 + std::exp(z2)) + p.E;
}

double eval_stable(const UafParams& p, double x) {
  const auto [z1, z2] = exponents(p, x);
  // Linear parts and log1p tails are differenced separately so that
  // mirrored arguments (the identity preset) cancel exactly.
  const double linear = std::max(z1, 0.0) - std::max(z2, 0.0);
  const double tails = std::log1p(std::exp(-std::abs(z1))) - std::log1p(std::exp(-std::abs(z2)));
  return linear + tails + p.E;
}

UafGradient grad(const UafParams& p, double x) {
  const auto [z1, z2] = exponents(p, x);
  const double s1 = logistic(z1);
  const double s2 = logistic(z2);
  UafGradient g;
  g.d_x = s1 * (p.A + 2.0 * p.C * x) - s2 * p.D;
  g.d_A = s1 * (x + p.B);
  g.d_B = s1 * p.A + s2 * p.D;
  g.d_C = s1 * x * x;
  g.d_D = -s2 * (x - p.B);
  g.d_E = 1.0;
  return g;
}

UafParams preset(Preset which) {
  switch (which.kind) {
    case PresetKind::Identity:
      return {1.0, 0.0, 0.0, -1.0, 0.0};
    case PresetKind::Step:
      return {kStepSlope, 1.0 / (2.0 * kStepSlope), 0.0, kStepSlope, 0.0};
    case PresetKind::Sigmoid:
      return {kSigmoidSlope, 1.0 / (2.0 * kSigmoidSlope), 0.0, kSigmoidSlope, 0.0};
    case PresetKind::Tanh:
      return {kTanhSlope, 1.0 / kTanhSlope, 0.0, kTanhSlope, -1.0};
    case PresetKind::Relu:
      return {kReluSlope, 0.0, 0.0, kReluSlope - 1.0, 0.0};
    case PresetKind::LeakyRelu:
      if (!(which.alpha > 0.0 && which.alpha <= 0.1)) {
        throw std::invalid_argument("leaky_relu alpha must lie in (0, 0.1], got " +
                                    std::to_string(which.alpha));
      }
      return {1.0, 0.0, 0.0, -which.alpha, 0.0};
    case PresetKind::Softplus:
      return {1.0, 0.0, 0.0, 0.0, kLn2};
    case PresetKind::Gaussian:
      return {0.0, 0.0, kGaussianCurvature, 0.0, kLn2};
  }
  throw std::invalid_argument("bad PresetKind");
}

std::vector<double> eval_batch(const UafParams& p, std::span<const double> xs) {
  std::vector<double> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [&p](double x) { return eval_stable(p, x); });
  return out;
}

}  // namespace uafkit
