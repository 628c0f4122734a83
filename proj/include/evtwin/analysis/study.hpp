#pragma once

#include <string>
#include <utility>
#include <vector>

#include "evtwin/core/types.hpp"
#include "evtwin/sim/config.hpp"

namespace evtwin::analysis {

/// Which noise sources stay enabled for one false-alarm measurement.
struct NoiseSelection {
  std::string name;
  bool shot = false;
  bool dark = false;
  bool leak = false;
  bool hot = false;
};

struct FalseAlarmReport {
  /// One (selection name, events per pixel per step) entry per requested
  /// combination, ending with "combined" for the config as given.
  std::vector<std::pair<std::string, double>> rates;
};

/// Simulates a temporally static background for n_steps and reports noise
/// event rates per pixel per step, once per enabled noise source and once
/// combined.
FalseAlarmReport false_alarm_rate(const sim::SensorConfig& config,
                                  const PixelMap& background, int n_steps);

/// Single combined rate for the config as given.
double false_alarm_rate_combined(const sim::SensorConfig& config,
                                 const PixelMap& background, int n_steps);

struct LatencyPoint {
  Timestamp refractory = 0;
  double rate = 0.0;      // events per pixel per step
  double ratio = 0.0;     // rate / rate(dt); NaN when the baseline is silent
  double expected = 0.0;  // dt / refractory
};

/// False-alarm rate for each refractory value, with ratios against the
/// R = dt baseline for comparison with the dt/R downtime scaling.
std::vector<LatencyPoint> latency_scaling(
    const sim::SensorConfig& config, const PixelMap& background,
    const std::vector<Timestamp>& refractory_values, int n_steps);

/// Per-pixel probability of a +1 event at the impulse step: each trial
/// renders the background, then steps once on background + impulse with a
/// fresh seed substream; every pixel counts as an independent trial. The
/// same routine with impulse = 0 yields the matching per-step
/// false-positive probability.
double detection_probability(const sim::SensorConfig& config,
                             const PixelMap& background, double impulse,
                             int n_trials);

struct RocCurve {
  /// (false alarm, detection) aligned with sweep_values, followed by the
  /// appended (0,0) and (1,1) endpoints; auc() orders its own copy by false
  /// alarm for integration.
  std::vector<std::pair<double, double>> points;
  std::vector<double> sweep_values;  // contrast thresholds swept
};

/// One operating point per threshold in `sweep`: detection probability of
/// the impulse against the false-positive probability of the bare
/// background, both from two-step Monte-Carlo trials with paired seeds
/// across thresholds.
RocCurve roc_curve(const sim::SensorConfig& config, const PixelMap& background,
                   double impulse, const std::vector<double>& sweep,
                   int n_trials);

/// Trapezoidal area under the curve; Error{DegenerateCurve} below 2 points.
double auc(const RocCurve& curve);

struct AucGrid {
  std::vector<double> impulse_values;    // rows
  std::vector<double> threshold_values;  // columns
  PixelMapT<double> auc;                 // impulse x threshold
  std::vector<double> background_set;
};

/// AUC per (impulse, threshold) cell, averaged over the background set.
/// Cells are independent; `threads` caps the workers (results do not
/// depend on the thread count).
AucGrid auc_grid(const sim::SensorConfig& config_base,
                 const std::vector<double>& background_set,
                 const std::vector<double>& impulse_values,
                 const std::vector<double>& threshold_values, int n_trials,
                 int threads = 1);

struct OperatingPoint {
  double impulse = 0.0;    // grid row actually used
  double threshold = 0.0;  // argmax of that row
  double auc = 0.0;
};

/// Best threshold for the grid row nearest to `impulse`; ties resolve
/// toward the larger threshold.
OperatingPoint optimal_operating_point(const AucGrid& grid, double impulse);

/// Diffuse-background lookup table: photon levels keyed by a time-of-day
/// label and hour.
struct BackgroundProfile {
  struct Entry {
    std::string label;
    double hour = 0.0;
    double photons = 0.0;
  };
  std::vector<Entry> entries;  // sorted by hour
};

/// Two-regime example profile (morning low, daytime high).
BackgroundProfile example_background_profile();

/// Linear interpolation over the profile hours, clamped at the ends.
double background_at_hour(const BackgroundProfile& profile, double hour);

/// Exact label lookup. Throws Error{EmptyProfile} on an empty profile and
/// Error{BadSpec} for an unknown label.
double background_for_label(const BackgroundProfile& profile,
                            const std::string& label);

}  // namespace evtwin::analysis
