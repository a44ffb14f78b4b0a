#pragma once

// The five-parameter universal activation function
//
//   f(x) = ln(1 + e^{A(x+B) + Cx^2}) - ln(1 + e^{D(x-B)}) + E
//
// evaluated either literally (eval_naive, overflow-checked) or through the
// max(z,0) + log1p(e^{-|z|}) rewrite of softplus (eval_stable).

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uafkit {

/// Raised by eval_naive when an exponent argument leaves the range of exp().
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

enum class ParamId { A = 0, B = 1, C = 2, D = 3, E = 4 };

inline constexpr std::array<ParamId, 5> kAllParams = {ParamId::A, ParamId::B, ParamId::C,
                                                      ParamId::D, ParamId::E};

const char* param_name(ParamId id);
ParamId parse_param(const std::string& name);

struct UafParams {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;
  double E = 0.0;

  double& operator[](ParamId id);
  double operator[](ParamId id) const;

  bool is_finite() const;

  friend bool operator==(const UafParams&, const UafParams&) = default;
};

struct UafGradient {
  double d_x = 0.0;
  double d_A = 0.0;
  double d_B = 0.0;
  double d_C = 0.0;
  double d_D = 0.0;
  double d_E = 1.0;

  double wrt(ParamId id) const;
};

enum class PresetKind { Identity, Step, Sigmoid, Tanh, Relu, LeakyRelu, Softplus, Gaussian };

inline constexpr std::array<PresetKind, 8> kAllPresetKinds = {
    PresetKind::Identity, PresetKind::Step, PresetKind::Relu,     PresetKind::LeakyRelu,
    PresetKind::Sigmoid,  PresetKind::Tanh, PresetKind::Softplus, PresetKind::Gaussian};

/// A preset kind plus the LeakyReLU slope (ignored by every other kind).
struct Preset {
  PresetKind kind = PresetKind::Identity;
  double alpha = 0.1;

  friend bool operator==(const Preset&, const Preset&) = default;
};

/// CLI spelling: identity, step, sigmoid, tanh, relu, leaky_relu, softplus, gaussian.
const char* preset_name(PresetKind kind);
PresetKind parse_preset_kind(const std::string& name);

// Constants of the fitted presets.
inline constexpr double kStepSlope = 70.9992;
inline constexpr double kReluSlope = 70.9992;
inline constexpr double kSigmoidSlope = 1.01605291;
inline constexpr double kTanhSlope = 2.12616013;
inline constexpr double kGaussianCurvature = -0.61341425;
inline constexpr double kLn2 = 0.69314718055994530942;

/// ln(1 + e^z) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// 1 / (1 + e^{-z}) without overflow.
inline double logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Largest argument accepted by eval_naive before e^z overflows.
inline constexpr double kNaiveExpLimit = 709.0;

double eval_naive(const UafParams& p, double x);
double eval_stable(const UafParams& p, double x);
UafGradient grad(const UafParams& p, double x);

/// Throws std::invalid_argument for a LeakyRelu slope outside (0, 0.1].
UafParams preset(Preset which);
inline UafParams preset(PresetKind kind) { return preset(Preset{kind}); }

std::vector<double> eval_batch(const UafParams& p, std::span<const double> xs);

}  // namespace uafkit
