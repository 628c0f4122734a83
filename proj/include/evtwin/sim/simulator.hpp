#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "evtwin/core/types.hpp"
#include "evtwin/sim/config.hpp"

namespace evtwin::sim {

/// Mutable per-pixel state of one simulator instance. Thresholds and the
/// hot mask are sampled once at initialization and kept as 2D maps.
struct PixelState {
  PixelMap v_ref;        // normalized reference voltage, [0, 1]
  TimestampGrid t_lat;   // pixel is active when t >= t_lat
  PixelMap theta_pos;    // per-pixel positive thresholds, log-voltage units
  PixelMap theta_neg;    // per-pixel negative thresholds
  BoolMap hot_mask;
  std::uint64_t seed = 0;
  std::uint64_t step_count = 0;  // RNG substream key for the next step
  Timestamp t_current = 0;
};

struct StepResult {
  std::vector<EventRecord> events;  // tie-break order (y, x)
  PolarityMap polarity;             // {-1, 0, +1} per pixel
};

struct SimOutput {
  EventStream stream;
  std::optional<EventFrameVolume> frames;  // one bin per simulation step
};

/// Per-pixel contrast thresholds: Normal(mean, theta_sigma^2), positive map
/// clamped up to +1e-6 and negative map down to -1e-6. Deterministic in
/// config.seed.
std::pair<PixelMap, PixelMap> sample_thresholds(const SensorConfig& config);

/// Bernoulli(hot_pixel_fraction) per pixel, deterministic in config.seed.
BoolMap sample_hot_mask(const SensorConfig& config);

/// Photocurrent J = Q * flux * q_e. With shot noise enabled the flux is
/// first replaced by a Poisson draw keyed on (seed, step, pixel).
PixelMap photocurrent(const PixelMap& flux_frame, const SensorConfig& config,
                      std::uint64_t step);

/// Normalized comparator voltage
///   V = min(gain * safe_log(J + sigma_dark * n), L) / L,
/// with L = safe_log(well_capacity) and n a standard normal draw per pixel
/// when sigma_dark > 0. Output lies in [0, 1].
PixelMap log_voltage(const PixelMap& current, const SensorConfig& config,
                     std::uint64_t step);

/// Reference voltages from a noise-free rendering of the first frame; all
/// pixels active at t0; thresholds and hot mask sampled. Emits no events.
PixelState init_state(const SensorConfig& config, const PixelMap& first_frame,
                      Timestamp t0 = 0);

/// Advances the pixel array by one frame at time t_j:
///  - threshold comparison against the stored reference (active pixels only),
///  - leak events from a single uniform draw per pixel per step,
///  - hot pixels emit +1 whenever they are past refractory,
///  - on an event the reference voltage is replaced and the latency clock
///    set to t_j + refractory.
StepResult step(PixelState& state, const PixelMap& flux_frame, Timestamp t_j,
                const SensorConfig& config);

/// Full run: init_state on frame 0, then one step per remaining frame.
SimOutput simulate(const SensorConfig& config, const FluxSequence& flux,
                   bool emit_frames = false);

}  // namespace evtwin::sim
