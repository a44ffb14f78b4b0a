#pragma once

#include <vector>

#include "uafkit/targets.hpp"
#include "uafkit/uaf.hpp"

namespace uafkit {

struct Interval {
  double lo = -10.0;
  double hi = 10.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Throws std::invalid_argument unless lo < hi and both are finite.
void validate(const Interval& interval);

struct CriticalPoint {
  double x = 0.0;
  double error = 0.0;
};

/// Error limits on either side of a target's kink or jump at the origin.
struct KinkPoint {
  double x = 0.0;
  double error_left = 0.0;
  double error_right = 0.0;
};

struct ErrorReport {
  TargetActivation target;
  UafParams params;
  Interval interval;
  int n_samples = 0;
  std::vector<CriticalPoint> critical_points;
  std::vector<KinkPoint> kinks;
  double max_abs_error = 0.0;
  std::vector<double> max_error_locations;
  double rmse = 0.0;
};

struct RmseRow {
  Preset kind;
  double rmse = 0.0;
  double max_error = 0.0;
  std::vector<double> locations;
};

struct RmseTable {
  Interval interval;
  int n_samples = 0;
  std::vector<RmseRow> rows;
};

inline constexpr int kDefaultSamples = 2001;
inline constexpr double kScanStep = 1e-3;

/// Stationary points of approx_error inside the interval, sorted by x.
///
/// The error derivative is sampled every `scan_step`; each sign change is
/// bisected down to adjacent doubles. For targets with a kink at the origin
/// the two sides are searched separately with one-sided derivatives, and the
/// origin itself is left to ErrorReport::kinks.
std::vector<CriticalPoint> critical_points(const UafParams& p, const TargetActivation& t,
                                           Interval interval, double scan_step = kScanStep);

/// RMS of approx_error over n_samples evenly spaced points, endpoints included.
double interval_rmse(const UafParams& p, const TargetActivation& t, Interval interval,
                     int n_samples = kDefaultSamples);

/// Critical points, kink limits, global max |error| and grid RMSE.
ErrorReport error_report(const UafParams& p, const TargetActivation& t, Interval interval,
                         int n_samples = kDefaultSamples);

/// Every preset against its own target on [-10, 10]; LeakyRelu uses `alpha`.
RmseTable rmse_table(int n_samples = kDefaultSamples, double alpha = 0.1);

/// Left-hand side of the closed-form dE/dx = 0 equation for the Sigmoid,
/// Tanh, Relu, LeakyRelu and Gaussian families. Relu and LeakyRelu switch
/// between their x > 0 and x < 0 forms on the sign of x.
///
/// Throws std::invalid_argument for Identity, Step and Softplus.
double characteristic_residual(const Preset& kind, const UafParams& p, double x);

/// Sum of the absolute values of the residual's terms; used to judge how
/// close to zero a residual is relative to its own scale.
double characteristic_magnitude(const Preset& kind, const UafParams& p, double x);

}  // namespace uafkit
