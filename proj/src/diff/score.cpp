#include "evtwin/diff/score.hpp"

#include "evtwin/sim/rng.hpp"

namespace evtwin::diff {

double poisson_score_gradient(
    const std::function<double(std::int64_t)>& loss_fn, double lambda,
    std::int64_t n_samples, std::uint64_t seed) {
  if (!(lambda > 0.0)) {
    throw Error(ErrorCode::NonPositiveLambda, "lambda must be positive");
  }
  if (n_samples < 1) {
    throw Error(ErrorCode::InvariantViolation, "n_samples must be >= 1");
  }
  double accum = 0.0;
  for (std::int64_t s = 0; s < n_samples; ++s) {
    RngStream r(seed, static_cast<std::uint64_t>(RngTag::score),
                static_cast<std::uint64_t>(s));
    const std::int64_t n = r.poisson(lambda);
    accum += loss_fn(n) * (double(n) / lambda - 1.0);
  }
  return accum / double(n_samples);
}

}  // namespace evtwin::diff
