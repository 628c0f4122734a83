#pragma once

#include <cstdint>
#include <optional>

#include "evtwin/core/types.hpp"

namespace evtwin::sim {

/// All camera parameters of the forward model. Thresholds are expressed in
/// log-voltage units (the units of gain * log(photocurrent)); the simulator
/// rescales them internally to match the well-capacity-normalized voltage.
struct SensorConfig {
  int width = 64;
  int height = 64;
  Timestamp dt = 1000;  // microseconds per simulation step

  double gain = 1.0;                // system gain A
  double qe = 1.0;                  // electron charge scale q_e
  double quantum_efficiency = 1.0;  // scalar Q in (0, 1]
  std::optional<PixelMap> quantum_efficiency_map;  // per-pixel Q override

  double theta_pos_mean = 0.2;   // mean positive threshold, > 0
  double theta_neg_mean = -0.2;  // mean negative threshold, < 0
  double theta_sigma = 0.0;      // per-pixel threshold std deviation

  double sigma_dark = 0.0;         // dark-noise std, photocurrent units
  double leak_chance = 0.0;        // c_leak in [0, 0.5)
  Timestamp refractory = 0;        // post-event dead time, microseconds
  double hot_pixel_fraction = 0.0; // in [0, 1)
  double well_capacity = 1e9;      // photocurrent saturation level, > 1
  bool shot_noise = false;

  std::uint64_t seed = 0;
};

/// Throws Error{InvariantViolation} when a field is outside its domain.
void validate(const SensorConfig& config);

/// Saturated log-voltage scale: safe_log(well_capacity). Voltages are
/// normalized by this value so every intermediate lies in [0, 1].
double well_capacity_log(const SensorConfig& config);

/// Per-pixel quantum efficiency as a map regardless of how it was given.
PixelMap quantum_efficiency_map(const SensorConfig& config);

}  // namespace evtwin::sim
