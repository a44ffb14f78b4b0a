#include "uafkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace uafkit {

void validate(const Interval& interval) {
  if (!std::isfinite(interval.lo) || !std::isfinite(interval.hi) || !(interval.lo < interval.hi)) {
    throw std::invalid_argument("interval must satisfy lo < hi with finite ends, got [" +
                                std::to_string(interval.lo) + ", " + std::to_string(interval.hi) +
                                "]");
  }
}

namespace {

// Bisects a bracketed sign change of dE/dx until the bracket cannot shrink.
double bisect_root(const UafParams& p, const TargetActivation& t, Side side, double a, double b,
                   double fa) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) {
      break;
    }
    const double fm = approx_error_derivative(p, t, mid, side);
    if (fm == 0.0) {
      return mid;
    }
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

void scan_segment(const UafParams& p, const TargetActivation& t, double lo, double hi, Side side,
                  double scan_step, std::vector<CriticalPoint>& out) {
  const auto n = static_cast<long>(std::ceil((hi - lo) / scan_step));
  const double h = (hi - lo) / static_cast<double>(n);
  auto at = [&](long k) { return k == n ? hi : lo + static_cast<double>(k) * h; };

  double prev_x = at(0);
  double prev_v = approx_error_derivative(p, t, prev_x, side);
  // Start of the current run of exact zeros, if any.
  long zero_run_start = prev_v == 0.0 ? 0 : -1;
  double sign_before_run = 0.0;

  for (long k = 1; k <= n; ++k) {
    const double x = at(k);
    const double v = approx_error_derivative(p, t, x, side);
    if (v == 0.0) {
      if (zero_run_start < 0) {
        zero_run_start = k;
        sign_before_run = prev_v;
      }
    } else if (zero_run_start >= 0) {
      // A zero run counts only when the derivative changes sign across it.
      if (sign_before_run != 0.0 && (sign_before_run < 0.0) != (v < 0.0)) {
        const double xr = 0.5 * (at(zero_run_start) + at(k - 1));
        out.push_back({xr, approx_error(p, t, xr)});
      }
      zero_run_start = -1;
    } else if ((prev_v < 0.0) != (v < 0.0)) {
      const double xr = bisect_root(p, t, side, prev_x, x, prev_v);
      out.push_back({xr, approx_error(p, t, xr)});
    }
    prev_x = x;
    prev_v = v;
  }
}

double pow2(double v) { return v * v; }

struct Terms {
  double values[10] = {};
  int count = 0;

  void add(double v) { values[count++] = v; }
  double sum() const {
    double s = 0.0;
    for (int i = 0; i < count; ++i) s += values[i];
    return s;
  }
  double magnitude() const {
    double s = 0.0;
    for (int i = 0; i < count; ++i) s += std::abs(values[i]);
    return s;
  }
};

Terms characteristic_terms(const Preset& kind, const UafParams& p, double x) {
  using std::exp;
  Terms t;
  switch (kind.kind) {
    case PresetKind::Sigmoid: {
      const double a = p.A;
      const double e = std::numbers::e;
      t.add((e - 1.0) * a * pow2(exp(x) + 1.0) * exp(a * x - 0.5));
      t.add(exp(x) * (exp(a * x - 0.5) + 1.0) * (-exp(a * x + 0.5) - 1.0));
      return t;
    }
    case PresetKind::Tanh: {
      const double a = p.A;
      t.add(-a * exp(a * x - 1.0));
      t.add(a * exp(a * x + 1.0));
      t.add(-2.0 * a * exp(a * x + 2.0 * x - 1.0));
      t.add(2.0 * a * exp(a * x + 2.0 * x + 1.0));
      t.add(-a * exp(a * x + 4.0 * x - 1.0));
      t.add(a * exp(a * x + 4.0 * x + 1.0));
      t.add(-4.0 * exp(a * x + 2.0 * x - 1.0));
      t.add(-4.0 * exp(a * x + 2.0 * x + 1.0));
      t.add(-4.0 * exp(2.0 * a * x + 2.0 * x));
      t.add(-4.0 * exp(2.0 * x));
      return t;
    }
    case PresetKind::Relu: {
      const double a = p.A;
      if (x >= 0.0) {
        t.add((a - 1.0) * exp(a * x));
        t.add(-a * exp((a - 1.0) * x));
        t.add(-1.0);
      } else {
        t.add(a * exp(x));
        t.add(exp(a * x));
        t.add(1.0);
        t.add(-a);
      }
      return t;
    }
    case PresetKind::LeakyRelu: {
      const double alpha = -p.D;
      if (x >= 0.0) {
        t.add((alpha - 1.0) * exp(-alpha * x));
        t.add(alpha * exp(x - alpha * x));
        t.add(-1.0);
      } else {
        t.add(alpha * (-exp(x) - 1.0));
        t.add(exp(x) * (exp(-alpha * x) + 1.0));
      }
      return t;
    }
    case PresetKind::Gaussian: {
      const double c = p.C;
      const double ecx2 = exp(c * x * x);
      t.add(2.0 * c * x * ecx2 / (1.0 + ecx2));
      t.add(x * kLn2 * exp(-0.5 * x * x));
      return t;
    }
    default:
      throw std::invalid_argument(std::string("no characteristic equation for '") +
                                  preset_name(kind.kind) + "'");
  }
}

}  // namespace

std::vector<CriticalPoint> critical_points(const UafParams& p, const TargetActivation& t,
                                           Interval interval, double scan_step) {
  validate(interval);
  if (!(scan_step > 0.0)) {
    throw std::invalid_argument("scan_step must be positive");
  }
  std::vector<CriticalPoint> out;
  if (has_kink_at_origin(t) && interval.lo < 0.0 && interval.hi > 0.0) {
    scan_segment(p, t, interval.lo, 0.0, Side::Left, scan_step, out);
    scan_segment(p, t, 0.0, interval.hi, Side::Right, scan_step, out);
  } else {
    const Side side = interval.hi <= 0.0 ? Side::Left : Side::Right;
    scan_segment(p, t, interval.lo, interval.hi, side, scan_step, out);
  }
  std::sort(out.begin(), out.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return a.x < b.x; });
  return out;
}

double interval_rmse(const UafParams& p, const TargetActivation& t, Interval interval,
                     int n_samples) {
  validate(interval);
  if (n_samples < 2) {
    throw std::invalid_argument("n_samples must be at least 2, got " + std::to_string(n_samples));
  }
  const double h = (interval.hi - interval.lo) / static_cast<double>(n_samples - 1);
  double sum_sq = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double x = i == n_samples - 1 ? interval.hi : interval.lo + i * h;
    sum_sq += pow2(approx_error(p, t, x));
  }
  return std::sqrt(sum_sq / n_samples);
}

ErrorReport error_report(const UafParams& p, const TargetActivation& t, Interval interval,
                         int n_samples) {
  ErrorReport report;
  report.target = t;
  report.params = p;
  report.interval = interval;
  report.n_samples = n_samples;
  report.rmse = interval_rmse(p, t, interval, n_samples);
  report.critical_points = critical_points(p, t, interval);

  if (has_kink_at_origin(t) && interval.lo <= 0.0 && interval.hi >= 0.0) {
    const double f0 = eval_stable(p, 0.0);
    report.kinks.push_back({0.0, f0 - target_limit_at_origin(t, Side::Left),
                            f0 - target_limit_at_origin(t, Side::Right)});
  }

  std::vector<CriticalPoint> candidates = report.critical_points;
  candidates.push_back({interval.lo, approx_error(p, t, interval.lo)});
  candidates.push_back({interval.hi, approx_error(p, t, interval.hi)});
  for (const KinkPoint& k : report.kinks) {
    candidates.push_back({k.x, k.error_left});
    candidates.push_back({k.x, k.error_right});
  }

  double max_abs = 0.0;
  for (const CriticalPoint& c : candidates) {
    max_abs = std::max(max_abs, std::abs(c.error));
  }
  report.max_abs_error = max_abs;

  // Exact presets report no location.
  if (max_abs > 1e-12) {
    for (const CriticalPoint& c : candidates) {
      if (std::abs(c.error) >= max_abs * (1.0 - 1e-9)) {
        report.max_error_locations.push_back(c.x);
      }
    }
    std::sort(report.max_error_locations.begin(), report.max_error_locations.end());
    report.max_error_locations.erase(
        std::unique(report.max_error_locations.begin(), report.max_error_locations.end()),
        report.max_error_locations.end());
  }
  return report;
}

RmseTable rmse_table(int n_samples, double alpha) {
  RmseTable table;
  table.interval = {-10.0, 10.0};
  table.n_samples = n_samples;
  for (PresetKind kind : kAllPresetKinds) {
    const Preset which{kind, alpha};
    const ErrorReport r =
        error_report(preset(which), TargetActivation(which), table.interval, n_samples);
    table.rows.push_back({which, r.rmse, r.max_abs_error, r.max_error_locations});
  }
  return table;
}

double characteristic_residual(const Preset& kind, const UafParams& p, double x) {
  return characteristic_terms(kind, p, x).sum();
}

double characteristic_magnitude(const Preset& kind, const UafParams& p, double x) {
  return characteristic_terms(kind, p, x).magnitude();
}

}  // namespace uafkit
