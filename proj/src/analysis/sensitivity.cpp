#include "evtwin/analysis/sensitivity.hpp"

#include <cmath>

namespace evtwin::analysis {

SensitivityResult sensitivity_threshold(double phi_prev, double theta_pos,
                                        double theta_neg, double gain) {
  if (!(gain > 0.0)) {
    throw Error(ErrorCode::NonPositiveGain, "gain must be positive");
  }
  if (phi_prev < 0.0) {
    throw Error(ErrorCode::NegativeFlux, "phi_prev must be non-negative");
  }
  return {phi_prev * std::expm1(theta_pos / gain),
          phi_prev * std::expm1(theta_neg / gain)};
}

}  // namespace evtwin::analysis
