#include "evtwin/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evtwin/diff/safe_log.hpp"
#include "evtwin/sim/rng.hpp"

namespace evtwin::sim {

namespace {

constexpr double kThetaFloor = 1e-6;

std::uint64_t pixel_index(Eigen::Index y, Eigen::Index x, Eigen::Index width) {
  return static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(width) +
         static_cast<std::uint64_t>(x);
}

void require_dims(const PixelMap& frame, const SensorConfig& config,
                  const char* what) {
  if (frame.rows() != config.height || frame.cols() != config.width) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": frame is " +
                    std::to_string(frame.cols()) + "x" +
                    std::to_string(frame.rows()) + ", sensor is " +
                    std::to_string(config.width) + "x" +
                    std::to_string(config.height));
  }
}

}  // namespace

void validate(const SensorConfig& config) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::InvariantViolation, msg);
  };
  if (config.width <= 0 || config.height <= 0) fail("width/height must be positive");
  if (config.dt <= 0) fail("dt must be positive");
  if (config.gain <= 0.0) fail("gain must be positive");
  if (config.qe <= 0.0) fail("qe must be positive");
  if (!(config.quantum_efficiency > 0.0) || config.quantum_efficiency > 1.0) {
    fail("quantum_efficiency must lie in (0, 1]");
  }
  if (config.quantum_efficiency_map) {
    const PixelMap& q = *config.quantum_efficiency_map;
    if (q.rows() != config.height || q.cols() != config.width) {
      fail("quantum_efficiency_map dimensions do not match sensor");
    }
    if ((q <= 0.0).any() || (q > 1.0).any()) {
      fail("quantum_efficiency_map entries must lie in (0, 1]");
    }
  }
  if (!(config.theta_pos_mean > 0.0)) fail("theta_pos_mean must be > 0");
  if (!(config.theta_neg_mean < 0.0)) fail("theta_neg_mean must be < 0");
  if (config.theta_sigma < 0.0) fail("theta_sigma must be >= 0");
  if (config.sigma_dark < 0.0) fail("sigma_dark must be >= 0");
  if (config.leak_chance < 0.0 || config.leak_chance >= 0.5) {
    fail("leak_chance must lie in [0, 0.5)");
  }
  if (config.refractory < 0) fail("refractory must be >= 0");
  if (config.hot_pixel_fraction < 0.0 || config.hot_pixel_fraction >= 1.0) {
    fail("hot_pixel_fraction must lie in [0, 1)");
  }
  // The normalization divides by safe_log(well_capacity), so the capacity
  // has to sit above the one-photon floor.
  if (!(config.well_capacity > 1.0)) fail("well_capacity must be > 1");
}

double well_capacity_log(const SensorConfig& config) {
  return diff::safe_log(config.well_capacity);
}

PixelMap quantum_efficiency_map(const SensorConfig& config) {
  if (config.quantum_efficiency_map) return *config.quantum_efficiency_map;
  return PixelMap::Constant(config.height, config.width,
                            config.quantum_efficiency);
}

std::pair<PixelMap, PixelMap> sample_thresholds(const SensorConfig& config) {
  PixelMap pos(config.height, config.width);
  PixelMap neg(config.height, config.width);
  for (Eigen::Index y = 0; y < pos.rows(); ++y) {
    for (Eigen::Index x = 0; x < pos.cols(); ++x) {
      const std::uint64_t pix = pixel_index(y, x, pos.cols());
      if (config.theta_sigma == 0.0) {
        pos(y, x) = config.theta_pos_mean;
        neg(y, x) = config.theta_neg_mean;
      } else {
        RngStream rp = pixel_stream(config.seed, RngTag::threshold_pos, 0, pix);
        RngStream rn = pixel_stream(config.seed, RngTag::threshold_neg, 0, pix);
        pos(y, x) = config.theta_pos_mean + config.theta_sigma * rp.normal();
        neg(y, x) = config.theta_neg_mean + config.theta_sigma * rn.normal();
      }
      pos(y, x) = std::max(pos(y, x), kThetaFloor);
      neg(y, x) = std::min(neg(y, x), -kThetaFloor);
    }
  }
  return {std::move(pos), std::move(neg)};
}

BoolMap sample_hot_mask(const SensorConfig& config) {
  BoolMap mask = BoolMap::Constant(config.height, config.width, false);
  if (config.hot_pixel_fraction <= 0.0) return mask;
  for (Eigen::Index y = 0; y < mask.rows(); ++y) {
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      RngStream r = pixel_stream(config.seed, RngTag::hot_mask, 0,
                                 pixel_index(y, x, mask.cols()));
      mask(y, x) = r.uniform() < config.hot_pixel_fraction;
    }
  }
  return mask;
}

PixelMap photocurrent(const PixelMap& flux_frame, const SensorConfig& config,
                      std::uint64_t step) {
  require_dims(flux_frame, config, "photocurrent");
  if ((flux_frame < 0.0).any()) {
    throw Error(ErrorCode::NegativeFlux, "photon flux must be non-negative");
  }
  const PixelMap q = quantum_efficiency_map(config);
  if (!config.shot_noise) {
    return q * flux_frame * config.qe;
  }
  PixelMap current(flux_frame.rows(), flux_frame.cols());
  for (Eigen::Index y = 0; y < current.rows(); ++y) {
    for (Eigen::Index x = 0; x < current.cols(); ++x) {
      RngStream r = pixel_stream(config.seed, RngTag::shot, step,
                                 pixel_index(y, x, current.cols()));
      current(y, x) =
          q(y, x) * double(r.poisson(flux_frame(y, x))) * config.qe;
    }
  }
  return current;
}

PixelMap log_voltage(const PixelMap& current, const SensorConfig& config,
                     std::uint64_t step) {
  require_dims(current, config, "log_voltage");
  const double scale = well_capacity_log(config);
  PixelMap v(current.rows(), current.cols());
  for (Eigen::Index y = 0; y < v.rows(); ++y) {
    for (Eigen::Index x = 0; x < v.cols(); ++x) {
      double j = current(y, x);
      if (config.sigma_dark > 0.0) {
        RngStream r = pixel_stream(config.seed, RngTag::dark, step,
                                   pixel_index(y, x, v.cols()));
        j += config.sigma_dark * r.normal();
      }
      v(y, x) = std::min(config.gain * diff::safe_log(j), scale) / scale;
    }
  }
  return v;
}

PixelState init_state(const SensorConfig& config, const PixelMap& first_frame,
                      Timestamp t0) {
  validate(config);
  require_dims(first_frame, config, "init_state");

  SensorConfig quiet = config;
  quiet.shot_noise = false;
  quiet.sigma_dark = 0.0;

  PixelState state;
  state.v_ref = log_voltage(photocurrent(first_frame, quiet, 0), quiet, 0);
  state.t_lat = TimestampGrid::Constant(config.height, config.width, t0);
  auto thresholds = sample_thresholds(config);
  state.theta_pos = std::move(thresholds.first);
  state.theta_neg = std::move(thresholds.second);
  state.hot_mask = sample_hot_mask(config);
  state.seed = config.seed;
  state.step_count = 1;
  state.t_current = t0;
  return state;
}

StepResult step(PixelState& state, const PixelMap& flux_frame, Timestamp t_j,
                const SensorConfig& config) {
  require_dims(flux_frame, config, "step");
  if (t_j <= state.t_current) {
    throw Error(ErrorCode::NonMonotonicTime,
                "step time " + std::to_string(t_j) +
                    " does not advance past " +
                    std::to_string(state.t_current));
  }

  const std::uint64_t step_key = state.step_count;
  const PixelMap voltage =
      log_voltage(photocurrent(flux_frame, config, step_key), config, step_key);
  const double scale = well_capacity_log(config);

  StepResult result;
  result.polarity = PolarityMap::Zero(config.height, config.width);
  for (Eigen::Index y = 0; y < voltage.rows(); ++y) {
    for (Eigen::Index x = 0; x < voltage.cols(); ++x) {
      if (t_j < state.t_lat(y, x)) continue;  // still in refractory

      int p = 0;
      if (state.hot_mask(y, x)) {
        p = 1;
      } else {
        // Threshold comparison in log-voltage units; leak only consulted
        // when no threshold event fired.
        const double dv = scale * (voltage(y, x) - state.v_ref(y, x));
        if (dv >= state.theta_pos(y, x)) {
          p = 1;
        } else if (dv <= state.theta_neg(y, x)) {
          p = -1;
        } else if (config.leak_chance > 0.0) {
          RngStream r = pixel_stream(config.seed, RngTag::leak, step_key,
                                     pixel_index(y, x, voltage.cols()));
          const double u = r.uniform();
          if (u >= 1.0 - config.leak_chance) {
            p = 1;
          } else if (u <= config.leak_chance) {
            p = -1;
          }
        }
      }

      if (p != 0) {
        result.polarity(y, x) = p;
        result.events.push_back(EventRecord{
            t_j, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
            static_cast<std::int8_t>(p)});
        state.v_ref(y, x) = voltage(y, x);
        state.t_lat(y, x) = t_j + config.refractory;
      } else {
        state.t_lat(y, x) = t_j;
      }
    }
  }

  state.t_current = t_j;
  state.step_count += 1;
  return result;
}

SimOutput simulate(const SensorConfig& config, const FluxSequence& flux,
                   bool emit_frames) {
  validate(config);
  if (flux.frames.empty()) {
    throw Error(ErrorCode::EmptyStream, "flux sequence holds no frames");
  }
  if (flux.width() != config.width || flux.height() != config.height) {
    throw Error(ErrorCode::DimensionMismatch,
                "flux dimensions do not match sensor configuration");
  }
  if (flux.dt <= 0) {
    throw Error(ErrorCode::InvariantViolation, "flux dt must be positive");
  }

  PixelState state = init_state(config, flux.frames.front(), flux.t0);

  SimOutput output;
  output.stream.width = config.width;
  output.stream.height = config.height;
  output.stream.dt = flux.dt;

  const int n_steps = static_cast<int>(flux.frames.size()) - 1;
  std::vector<PolarityMap> step_frames;
  if (emit_frames && n_steps > 0) step_frames.reserve(n_steps);

  for (int j = 1; j <= n_steps; ++j) {
    const Timestamp t_j = flux.t0 + static_cast<Timestamp>(j) * flux.dt;
    StepResult r = step(state, flux.frames[static_cast<std::size_t>(j)], t_j,
                        config);
    output.stream.records.insert(output.stream.records.end(),
                                 r.events.begin(), r.events.end());
    if (emit_frames) step_frames.push_back(std::move(r.polarity));
  }

  if (emit_frames && n_steps > 0) {
    EventFrameVolume volume;
    volume.mode = FrameMode::polarity;
    volume.t0 = flux.t0 + flux.dt;
    volume.dt_bin = flux.dt;
    volume.frames = std::move(step_frames);
    output.frames = std::move(volume);
  }
  return output;
}

}  // namespace evtwin::sim
