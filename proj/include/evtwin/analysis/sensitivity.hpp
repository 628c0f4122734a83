#pragma once

#include "evtwin/core/types.hpp"

namespace evtwin::analysis {

/// Minimum photon-flux change that drives the comparator across each
/// threshold, given the previous flux level.
struct SensitivityResult {
  double delta_phi_pos = 0.0;  // > 0 when theta_pos > 0
  double delta_phi_neg = 0.0;  // < 0 when theta_neg < 0
};

/// delta_phi = phi_prev * (exp(theta / gain) - 1) for each polarity,
/// evaluated with expm1 for full precision at small thresholds. Throws
/// Error{NonPositiveGain} when gain <= 0.
SensitivityResult sensitivity_threshold(double phi_prev, double theta_pos,
                                        double theta_neg, double gain);

}  // namespace evtwin::analysis
