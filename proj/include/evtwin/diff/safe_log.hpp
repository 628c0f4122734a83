#pragma once

#include <cmath>

namespace evtwin::diff {

/// Clamped logarithm: a photodiode produces no current below one photon, so
/// the singular branch of log is replaced by 0. Total on all reals.
inline double safe_log(double x) { return x < 1.0 ? 0.0 : std::log(x); }

/// Derivative rule paired with safe_log: 0 on the clamped branch, 1/x above.
inline double safe_log_grad(double x) { return x < 1.0 ? 0.0 : 1.0 / x; }

/// Overflow-safe logistic sigmoid of k*u. Strictly increasing in u, bounded
/// in (0, 1).
inline double soft_indicator(double u, double k) {
  const double a = k * u;
  if (a >= 0.0) {
    return 1.0 / (1.0 + std::exp(-a));
  }
  const double e = std::exp(a);
  return e / (1.0 + e);
}

/// d soft_indicator / du = k * s * (1 - s).
inline double soft_indicator_grad(double u, double k) {
  const double s = soft_indicator(u, k);
  return k * s * (1.0 - s);
}

}  // namespace evtwin::diff
