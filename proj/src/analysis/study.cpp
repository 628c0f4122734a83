#include "evtwin/analysis/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "evtwin/sim/rng.hpp"
#include "evtwin/sim/simulator.hpp"

namespace evtwin::analysis {

namespace {

sim::SensorConfig with_selection(const sim::SensorConfig& base,
                                 const NoiseSelection& sel) {
  sim::SensorConfig c = base;
  if (!sel.shot) c.shot_noise = false;
  if (!sel.dark) c.sigma_dark = 0.0;
  if (!sel.leak) c.leak_chance = 0.0;
  if (!sel.hot) c.hot_pixel_fraction = 0.0;
  return c;
}

double static_scene_rate(const sim::SensorConfig& config,
                         const PixelMap& background, int n_steps) {
  if (n_steps < 1) {
    throw Error(ErrorCode::InvariantViolation, "n_steps must be >= 1");
  }
  FluxSequence flux;
  flux.t0 = 0;
  flux.dt = config.dt;
  flux.frames.assign(static_cast<std::size_t>(n_steps) + 1, background);
  const sim::SimOutput out = sim::simulate(config, flux, false);
  return double(out.stream.records.size()) /
         (double(config.width) * double(config.height) * double(n_steps));
}

}  // namespace

FalseAlarmReport false_alarm_rate(const sim::SensorConfig& config,
                                  const PixelMap& background, int n_steps) {
  sim::validate(config);
  FalseAlarmReport report;
  std::vector<NoiseSelection> selections;
  if (config.shot_noise) {
    selections.push_back({"shot", true, false, false, false});
  }
  if (config.sigma_dark > 0.0) {
    selections.push_back({"dark", false, true, false, false});
  }
  if (config.leak_chance > 0.0) {
    selections.push_back({"leak", false, false, true, false});
  }
  if (config.hot_pixel_fraction > 0.0) {
    selections.push_back({"hot", false, false, false, true});
  }
  for (const NoiseSelection& sel : selections) {
    report.rates.emplace_back(
        sel.name,
        static_scene_rate(with_selection(config, sel), background, n_steps));
  }
  report.rates.emplace_back(
      "combined", static_scene_rate(config, background, n_steps));
  return report;
}

double false_alarm_rate_combined(const sim::SensorConfig& config,
                                 const PixelMap& background, int n_steps) {
  sim::validate(config);
  return static_scene_rate(config, background, n_steps);
}

std::vector<LatencyPoint> latency_scaling(
    const sim::SensorConfig& config, const PixelMap& background,
    const std::vector<Timestamp>& refractory_values, int n_steps) {
  sim::validate(config);
  for (Timestamp r : refractory_values) {
    if (r < config.dt) {
      throw Error(ErrorCode::InvariantViolation,
                  "refractory values must be >= dt");
    }
  }
  sim::SensorConfig base = config;
  base.refractory = config.dt;
  const double baseline = static_scene_rate(base, background, n_steps);

  std::vector<LatencyPoint> points;
  points.reserve(refractory_values.size());
  for (Timestamp r : refractory_values) {
    sim::SensorConfig c = config;
    c.refractory = r;
    LatencyPoint p;
    p.refractory = r;
    p.rate = static_scene_rate(c, background, n_steps);
    p.ratio = baseline > 0.0 ? p.rate / baseline
                             : std::numeric_limits<double>::quiet_NaN();
    p.expected = double(config.dt) / double(r);
    points.push_back(p);
  }
  return points;
}

namespace {

/// One two-step trial: noiseless reference from the background, one noisy
/// step on background + impulse. Returns the number of +1 events.
std::int64_t impulse_trial(const sim::SensorConfig& config,
                           const PixelMap& background, double impulse,
                           std::uint64_t trial_seed) {
  sim::SensorConfig c = config;
  c.seed = trial_seed;
  FluxSequence flux;
  flux.t0 = 0;
  flux.dt = c.dt;
  flux.frames.push_back(background);
  flux.frames.push_back(background + impulse);
  const sim::SimOutput out = sim::simulate(c, flux, false);
  std::int64_t positive = 0;
  for (const EventRecord& r : out.stream.records) {
    if (r.p > 0) ++positive;
  }
  return positive;
}

}  // namespace

double detection_probability(const sim::SensorConfig& config,
                             const PixelMap& background, double impulse,
                             int n_trials) {
  sim::validate(config);
  if (n_trials < 1) {
    throw Error(ErrorCode::InvariantViolation, "n_trials must be >= 1");
  }
  if (impulse < 0.0) {
    throw Error(ErrorCode::NegativeFlux, "impulse must be non-negative");
  }
  // Pixels see independent draws and a fresh reference every trial, so a
  // multi-pixel sensor contributes width*height parallel trials.
  std::int64_t detected = 0;
  for (int trial = 0; trial < n_trials; ++trial) {
    const std::uint64_t trial_seed =
        derive_seed(config.seed, RngTag::trial, std::uint64_t(trial));
    detected += impulse_trial(config, background, impulse, trial_seed);
  }
  return double(detected) /
         (double(n_trials) * double(config.width) * double(config.height));
}

RocCurve roc_curve(const sim::SensorConfig& config, const PixelMap& background,
                   double impulse, const std::vector<double>& sweep,
                   int n_trials) {
  if (sweep.empty()) {
    throw Error(ErrorCode::BadSpec, "threshold sweep must be non-empty");
  }
  RocCurve curve;
  curve.sweep_values = sweep;
  for (const double threshold : sweep) {
    sim::SensorConfig c = config;
    c.theta_pos_mean = threshold;
    c.theta_neg_mean = -threshold;
    // Paired seeds across thresholds; the null measurement draws from a
    // shifted substream so signal and background trials stay independent.
    const double pd = detection_probability(c, background, impulse, n_trials);
    sim::SensorConfig null_c = c;
    null_c.seed = derive_seed(c.seed, RngTag::trial, 0x5eedu);
    const double fa =
        std::clamp(detection_probability(null_c, background, 0.0, n_trials),
                   0.0, 1.0);
    curve.points.emplace_back(fa, pd);
  }
  // Endpoints appended after the sweep-aligned points; auc() orders its own
  // copy for integration.
  curve.points.emplace_back(0.0, 0.0);
  curve.points.emplace_back(1.0, 1.0);
  return curve;
}

double auc(const RocCurve& curve) {
  if (curve.points.size() < 2) {
    throw Error(ErrorCode::DegenerateCurve,
                "ROC integration needs at least 2 points");
  }
  std::vector<std::pair<double, double>> pts = curve.points;
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += 0.5 * (pts[i].second + pts[i - 1].second) *
            (pts[i].first - pts[i - 1].first);
  }
  return area;
}

AucGrid auc_grid(const sim::SensorConfig& config_base,
                 const std::vector<double>& background_set,
                 const std::vector<double>& impulse_values,
                 const std::vector<double>& threshold_values, int n_trials,
                 int threads) {
  if (background_set.empty() || impulse_values.empty() ||
      threshold_values.empty()) {
    throw Error(ErrorCode::EmptyGrid, "auc_grid axes must be non-empty");
  }
  AucGrid grid;
  grid.impulse_values = impulse_values;
  grid.threshold_values = threshold_values;
  grid.background_set = background_set;
  grid.auc = PixelMapT<double>::Zero(
      static_cast<Eigen::Index>(impulse_values.size()),
      static_cast<Eigen::Index>(threshold_values.size()));

  const auto n_cells = impulse_values.size() * threshold_values.size();
  auto run_cell = [&](std::size_t cell) {
    const std::size_t i = cell / threshold_values.size();
    const std::size_t j = cell % threshold_values.size();
    double mean = 0.0;
    for (std::size_t bg = 0; bg < background_set.size(); ++bg) {
      sim::SensorConfig c = config_base;
      c.seed = derive_seed(config_base.seed, RngTag::trial,
                           cell * background_set.size() + bg);
      const PixelMap background = PixelMap::Constant(
          c.height, c.width, background_set[bg]);
      const RocCurve curve = roc_curve(c, background, impulse_values[i],
                                       {threshold_values[j]}, n_trials);
      mean += auc(curve);
    }
    grid.auc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        mean / double(background_set.size());
  };

  const int n_workers = std::max(1, threads);
  if (n_workers == 1) {
    for (std::size_t cell = 0; cell < n_cells; ++cell) run_cell(cell);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t cell = next.fetch_add(1); cell < n_cells;
             cell = next.fetch_add(1)) {
          run_cell(cell);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }
  return grid;
}

OperatingPoint optimal_operating_point(const AucGrid& grid, double impulse) {
  if (grid.impulse_values.empty() || grid.threshold_values.empty()) {
    throw Error(ErrorCode::EmptyGrid, "grid is empty");
  }
  std::size_t row = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.impulse_values.size(); ++i) {
    const double d = std::fabs(grid.impulse_values[i] - impulse);
    if (d < best_dist) {
      best_dist = d;
      row = i;
    }
  }
  OperatingPoint best;
  best.impulse = grid.impulse_values[row];
  best.threshold = grid.threshold_values.front();
  best.auc = grid.auc(static_cast<Eigen::Index>(row), 0);
  for (std::size_t j = 1; j < grid.threshold_values.size(); ++j) {
    const double v = grid.auc(static_cast<Eigen::Index>(row),
                              static_cast<Eigen::Index>(j));
    if (v >= best.auc) {  // ties resolve toward the larger threshold
      best.auc = v;
      best.threshold = grid.threshold_values[j];
    }
  }
  return best;
}

BackgroundProfile example_background_profile() {
  return BackgroundProfile{{
      {"morning", 7.0, 200.0},
      {"day", 13.0, 2000.0},
  }};
}

double background_at_hour(const BackgroundProfile& profile, double hour) {
  if (profile.entries.empty()) {
    throw Error(ErrorCode::EmptyProfile, "background profile is empty");
  }
  const auto& e = profile.entries;
  if (hour <= e.front().hour) return e.front().photons;
  if (hour >= e.back().hour) return e.back().photons;
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (hour <= e[i].hour) {
      const double span = e[i].hour - e[i - 1].hour;
      const double w = span > 0.0 ? (hour - e[i - 1].hour) / span : 1.0;
      return (1.0 - w) * e[i - 1].photons + w * e[i].photons;
    }
  }
  return e.back().photons;
}

double background_for_label(const BackgroundProfile& profile,
                            const std::string& label) {
  if (profile.entries.empty()) {
    throw Error(ErrorCode::EmptyProfile, "background profile is empty");
  }
  for (const auto& entry : profile.entries) {
    if (entry.label == label) return entry.photons;
  }
  throw Error(ErrorCode::BadSpec, "unknown profile label: " + label);
}

}  // namespace evtwin::analysis
