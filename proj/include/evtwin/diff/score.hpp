#pragma once

#include <cstdint>
#include <functional>

#include "evtwin/core/types.hpp"

namespace evtwin::diff {

/// Monte-Carlo estimate of d/dlambda E[loss(N)], N ~ Poisson(lambda), via
/// the score function of the Poisson log-mass:
///   (1/n) * sum loss(N_s) * (N_s / lambda - 1).
/// Unbiased for any loss; deterministic in (seed). Throws
/// Error{NonPositiveLambda} when lambda <= 0.
double poisson_score_gradient(
    const std::function<double(std::int64_t)>& loss_fn, double lambda,
    std::int64_t n_samples, std::uint64_t seed);

}  // namespace evtwin::diff
