#include "evtwin/cli/run.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "evtwin/analysis/sensitivity.hpp"
#include "evtwin/analysis/study.hpp"
#include "evtwin/core/convert.hpp"
#include "evtwin/diff/relaxed.hpp"
#include "evtwin/diff/score.hpp"
#include "evtwin/filters/filters.hpp"
#include "evtwin/io/config_io.hpp"
#include "evtwin/io/events_io.hpp"
#include "evtwin/io/flux_io.hpp"
#include "evtwin/repr/point_cloud.hpp"
#include "evtwin/repr/reconstruct.hpp"
#include "evtwin/repr/time_surface.hpp"
#include "evtwin/sim/rng.hpp"
#include "evtwin/sim/simulator.hpp"

namespace evtwin::cli {

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

/// Seed precedence: --seed flag, then the config file, then EVTWIN_SEED,
/// then the built-in default.
void resolve_seed(io::ConfigDoc& doc, const CommonArgs& common) {
  if (common.seed) {
    doc.sensor.seed = *common.seed;
    return;
  }
  if (doc.keys_present.count("seed")) return;
  if (const char* env = std::getenv("EVTWIN_SEED")) {
    try {
      doc.sensor.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::TypeMismatch,
                  "EVTWIN_SEED is not an unsigned integer");
    }
  }
}

io::ConfigDoc load_config(const CommonArgs& common) {
  io::ConfigDoc doc;
  if (!common.config_path.empty()) {
    doc = io::read_config(common.config_path);
  }
  resolve_seed(doc, common);
  return doc;
}

EventStream read_events(const std::string& path, const io::ConfigDoc& doc) {
  if (io::guess_events_format(path) == "csv") {
    return io::read_events_csv(path, doc.sensor.width, doc.sensor.height,
                               doc.sensor.dt);
  }
  return io::read_events_bin(path);
}

void write_events(const EventStream& stream, const std::string& path) {
  if (io::guess_events_format(path) == "csv") {
    io::write_events_csv(stream, path);
  } else {
    io::write_events_bin(stream, path);
  }
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  return file;
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.empty()) continue;
    values.push_back(std::stod(field));
  }
  return values;
}

int run_impl(int argc, const char* const* argv) {
  CLI::App app{"evtwin: event-camera digital twin toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "flat key=value config file");
  app.add_option("--seed", common.seed, "seed override (wins over config)");
  app.add_option("--threads", common.threads, "worker cap for grid tasks")
      ->check(CLI::PositiveNumber);

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand(
      "simulate", "convert a flux volume into an event stream");
  std::string sim_flux, sim_out, sim_frames_out;
  sim_cmd->add_option("--flux", sim_flux, "input flux volume (.flx or dir)")
      ->required();
  sim_cmd->add_option("--out", sim_out, "output events (.csv or binary)")
      ->required();
  sim_cmd->add_option("--frames-out", sim_frames_out,
                      "optional per-step polarity volume");

  // ---- filter ----
  auto* filter_cmd =
      app.add_subcommand("filter", "denoise or select events");
  std::string filter_method, filter_in, filter_out, filter_keep = "both";
  filter_cmd->add_option("--method", filter_method, "polarity|baf|ief|ynoise")
      ->required();
  filter_cmd->add_option("--in", filter_in, "input events")->required();
  filter_cmd->add_option("--out", filter_out, "output events")->required();
  filter_cmd->add_option("--keep", filter_keep, "polarity filter: pos|neg|both");
  std::optional<Timestamp> f_baf_dt, f_ief_tm, f_ief_tp, f_ynoise_dt;
  std::optional<int> f_baf_r, f_ynoise_r, f_ynoise_min, f_ynoise_hot;
  std::optional<bool> f_ief_agnostic;
  filter_cmd->add_option("--baf-dt", f_baf_dt, "BAF window, us");
  filter_cmd->add_option("--baf-radius", f_baf_r, "BAF radius, pixels");
  filter_cmd->add_option("--ief-tminus", f_ief_tm, "IEF lookback, us");
  filter_cmd->add_option("--ief-tplus", f_ief_tp, "IEF lookahead, us");
  filter_cmd->add_option("--ief-agnostic", f_ief_agnostic,
                         "IEF ignores polarity");
  filter_cmd->add_option("--ynoise-dt", f_ynoise_dt, "YNoise window, us");
  filter_cmd->add_option("--ynoise-radius", f_ynoise_r, "YNoise radius");
  filter_cmd->add_option("--ynoise-coarse-min", f_ynoise_min,
                         "YNoise density minimum");
  filter_cmd->add_option("--ynoise-hot-max", f_ynoise_hot,
                         "YNoise hot-pixel rate limit");

  // ---- surface ----
  auto* surface_cmd =
      app.add_subcommand("surface", "render a time surface to CSV");
  std::string surf_in, surf_out, surf_mode = "exponential";
  double surf_tau = 10000.0;
  std::optional<Timestamp> surf_teval;
  bool surf_agnostic = false;
  std::vector<int> surf_window;
  surface_cmd->add_option("--in", surf_in, "input events")->required();
  surface_cmd->add_option("--out", surf_out, "output CSV matrix")->required();
  surface_cmd->add_option("--mode", surf_mode,
                          "exponential|count|average|average_abs");
  surface_cmd->add_option("--tau", surf_tau, "decay constant, us");
  surface_cmd->add_option("--t-eval", surf_teval,
                          "evaluation time (default: last event)");
  surface_cmd->add_flag("--agnostic", surf_agnostic, "ignore polarity");
  surface_cmd
      ->add_option("--window", surf_window, "sub-rectangle x0 y0 width height")
      ->expected(4);

  // ---- reconstruct ----
  auto* recon_cmd = app.add_subcommand(
      "reconstruct", "continuous-time intensity estimate from events");
  std::string recon_in, recon_prefix, recon_mode = "event_driven";
  std::string recon_smoothing = "none";
  double recon_alpha = 0.0;
  Timestamp recon_interval = 10000;
  std::optional<double> recon_tpos, recon_tneg;
  recon_cmd->add_option("--in", recon_in, "input events")->required();
  recon_cmd->add_option("--out-prefix", recon_prefix,
                        "output prefix for frame CSVs")
      ->required();
  recon_cmd->add_option("--mode", recon_mode, "event_driven|fixed_fps");
  recon_cmd->add_option("--alpha", recon_alpha, "decay rate, 1/us");
  recon_cmd->add_option("--interval", recon_interval,
                        "fixed_fps frame spacing, us");
  recon_cmd->add_option("--smoothing", recon_smoothing,
                        "none|gaussian|bilateral");
  recon_cmd->add_option("--tpos", recon_tpos, "positive threshold override");
  recon_cmd->add_option("--tneg", recon_tneg, "negative threshold override");

  // ---- analyze ----
  auto* an_cmd =
      app.add_subcommand("analyze", "noise, detection and ROC studies");
  std::string an_task, an_out;
  double an_phi = 1000.0, an_impulse = 100.0;
  std::optional<double> an_tpos, an_tneg, an_gain;
  std::string an_backgrounds = "1000", an_impulses, an_thresholds;
  int an_trials = 1000, an_steps = 1000;
  std::string an_refractories;
  an_cmd
      ->add_option("--task", an_task,
                   "sensitivity|falarm|latency|detection|roc|aucgrid|optimum")
      ->required();
  an_cmd->add_option("--out", an_out, "output CSV (default: stdout)");
  an_cmd->add_option("--phi", an_phi, "previous photon flux");
  an_cmd->add_option("--tpos", an_tpos, "positive threshold override");
  an_cmd->add_option("--tneg", an_tneg, "negative threshold override");
  an_cmd->add_option("--gain", an_gain, "system gain override");
  an_cmd->add_option("--impulse", an_impulse, "impulse strength, photons");
  an_cmd->add_option("--backgrounds", an_backgrounds,
                     "comma list of background photon levels");
  an_cmd->add_option("--impulses", an_impulses, "comma list of impulses");
  an_cmd->add_option("--thresholds", an_thresholds,
                     "comma list of contrast thresholds");
  an_cmd->add_option("--trials", an_trials, "Monte-Carlo trials");
  an_cmd->add_option("--steps", an_steps, "simulation steps");
  an_cmd->add_option("--refractories", an_refractories,
                     "comma list of refractory periods, us");

  // ---- convert ----
  auto* conv_cmd = app.add_subcommand(
      "convert", "convert events between csv/bin and to/from frames");
  std::string conv_in, conv_out;
  int conv_bins = 0;
  std::string conv_frame_mode = "polarity";
  conv_cmd->add_option("--in", conv_in, "input file (.csv/.evt/.efv)")
      ->required();
  conv_cmd->add_option("--out", conv_out, "output file (.csv/.evt/.efv)")
      ->required();
  conv_cmd->add_option("--bins", conv_bins,
                       "bin count for events->frames conversion");
  conv_cmd->add_option("--frame-mode", conv_frame_mode, "polarity|count");

  // ---- gradcheck ----
  auto* grad_cmd = app.add_subcommand(
      "gradcheck", "finite-difference verification of the backward pass");
  double grad_k = 20.0, grad_tol = 1e-3;
  int grad_w = 4, grad_h = 4, grad_frames = 5;
  grad_cmd->add_option("--steepness", grad_k, "sigmoid steepness");
  grad_cmd->add_option("--tolerance", grad_tol, "relative error bound");
  grad_cmd->add_option("--width", grad_w, "test sensor width");
  grad_cmd->add_option("--height", grad_h, "test sensor height");
  grad_cmd->add_option("--frames", grad_frames, "test flux frames");

  // global flags (--config, --seed, --threads) may follow the subcommand
  for (CLI::App* sub : {sim_cmd, filter_cmd, surface_cmd, recon_cmd, an_cmd,
                        conv_cmd, grad_cmd}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help and friends
      std::cout << app.help() << std::flush;
      return 0;
    }
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  io::ConfigDoc doc = load_config(common);

  if (sim_cmd->parsed()) {
    FluxSequence flux = io::read_flux_any(sim_flux);
    doc.sensor.width = flux.width();
    doc.sensor.height = flux.height();
    if (flux.dt > 0) doc.sensor.dt = flux.dt;
    const sim::SimOutput out =
        sim::simulate(doc.sensor, flux, !sim_frames_out.empty());
    write_events(out.stream, sim_out);
    if (!sim_frames_out.empty() && out.frames) {
      io::write_frames_bin(*out.frames, sim_frames_out);
    }
    std::cout << out.stream.records.size() << " events -> " << sim_out
              << "\n";
    return 0;
  }

  if (filter_cmd->parsed()) {
    if (f_baf_dt) doc.filters.baf_dt = *f_baf_dt;
    if (f_baf_r) doc.filters.baf_radius = *f_baf_r;
    if (f_ief_tm) doc.filters.ief_t_minus = *f_ief_tm;
    if (f_ief_tp) doc.filters.ief_t_plus = *f_ief_tp;
    if (f_ief_agnostic) doc.filters.ief_polarity_agnostic = *f_ief_agnostic;
    if (f_ynoise_dt) doc.filters.ynoise_dt = *f_ynoise_dt;
    if (f_ynoise_r) doc.filters.ynoise_radius = *f_ynoise_r;
    if (f_ynoise_min) doc.filters.ynoise_coarse_min = *f_ynoise_min;
    if (f_ynoise_hot) doc.filters.ynoise_hot_max = *f_ynoise_hot;

    if (filter_method != "polarity" && filter_method != "baf" &&
        filter_method != "ief" && filter_method != "ynoise") {
      std::cerr << "unknown --method value: " << filter_method << "\n\n"
                << filter_cmd->help();
      return 1;
    }
    filters::PolarityKeep keep = filters::PolarityKeep::both;
    if (filter_method == "polarity") {
      if (filter_keep == "pos") keep = filters::PolarityKeep::positive;
      else if (filter_keep == "neg") keep = filters::PolarityKeep::negative;
      else if (filter_keep != "both") {
        std::cerr << "unknown --keep value: " << filter_keep << "\n";
        return 1;
      }
    }

    EventStream stream = read_events(filter_in, doc);
    EventStream filtered;
    if (filter_method == "polarity") {
      filtered = filters::filter_polarity(stream, keep);
    } else if (filter_method == "baf") {
      filtered = filters::filter_baf(stream, doc.filters);
    } else if (filter_method == "ief") {
      filtered = filters::filter_ief(stream, doc.filters);
    } else {
      filtered = filters::filter_ynoise(stream, doc.filters);
    }
    write_events(filtered, filter_out);
    std::cout << filtered.records.size() << " of " << stream.records.size()
              << " events kept -> " << filter_out << "\n";
    return 0;
  }

  if (surface_cmd->parsed()) {
    EventStream stream = read_events(surf_in, doc);
    repr::TimeSurfaceSpec spec;
    if (surf_mode == "exponential") spec.mode = repr::SurfaceMode::exponential;
    else if (surf_mode == "count") spec.mode = repr::SurfaceMode::count;
    else if (surf_mode == "average") spec.mode = repr::SurfaceMode::average;
    else if (surf_mode == "average_abs") {
      spec.mode = repr::SurfaceMode::average_abs;
    } else {
      std::cerr << "unknown --mode value: " << surf_mode << "\n";
      return 1;
    }
    spec.tau = surf_tau;
    spec.t_eval = surf_teval ? *surf_teval
                             : (stream.empty() ? 0 : stream.records.back().t);
    spec.polarity_mode = surf_agnostic ? repr::PolarityMode::agnostic
                                       : repr::PolarityMode::sensitive;
    if (!surf_window.empty()) {
      spec.window = repr::SurfaceWindow{surf_window[0], surf_window[1],
                                        surf_window[2], surf_window[3]};
    }
    io::write_matrix_csv(repr::time_surface(stream, spec), surf_out);
    return 0;
  }

  if (recon_cmd->parsed()) {
    EventStream stream = read_events(recon_in, doc);
    repr::ReconstructionOptions options;
    options.alpha = recon_alpha;
    options.frame_interval = recon_interval;
    if (recon_mode == "event_driven") {
      options.mode = repr::ReconstructionMode::event_driven;
    } else if (recon_mode == "fixed_fps") {
      options.mode = repr::ReconstructionMode::fixed_fps;
    } else {
      std::cerr << "unknown --mode value: " << recon_mode << "\n";
      return 1;
    }
    if (recon_smoothing == "none") {
      options.smoothing.kind = repr::SmoothingKind::none;
    } else if (recon_smoothing == "gaussian") {
      options.smoothing.kind = repr::SmoothingKind::gaussian;
    } else if (recon_smoothing == "bilateral") {
      options.smoothing.kind = repr::SmoothingKind::bilateral;
    } else {
      std::cerr << "unknown --smoothing value: " << recon_smoothing << "\n";
      return 1;
    }
    const double tpos = recon_tpos ? *recon_tpos : doc.sensor.theta_pos_mean;
    const double tneg = recon_tneg ? *recon_tneg : doc.sensor.theta_neg_mean;
    const repr::IntensityReconstruction rec =
        repr::reconstruct_intensity(stream, tpos, tneg, options);
    for (std::size_t i = 0; i < rec.frames.size(); ++i) {
      char suffix[32];
      std::snprintf(suffix, sizeof(suffix), "_%06zu.csv", i);
      io::write_matrix_csv(rec.frames[i], recon_prefix + suffix);
    }
    std::cout << rec.frames.size() << " frames -> " << recon_prefix
              << "_*.csv\n";
    return 0;
  }

  if (an_cmd->parsed()) {
    const bool known_task =
        an_task == "sensitivity" || an_task == "falarm" ||
        an_task == "latency" || an_task == "detection" || an_task == "roc" ||
        an_task == "aucgrid" || an_task == "optimum";
    if (!known_task) {
      std::cerr << "unknown --task value: " << an_task << "\n\n"
                << an_cmd->help();
      return 1;
    }

    std::ofstream file;
    std::ostream& out = open_out(file, an_out);
    out.precision(12);

    const std::vector<double> backgrounds = parse_list(an_backgrounds);
    if (an_task == "sensitivity") {
      const double tpos = an_tpos.value_or(doc.sensor.theta_pos_mean);
      const double tneg = an_tneg.value_or(doc.sensor.theta_neg_mean);
      const double gain = an_gain.value_or(doc.sensor.gain);
      const analysis::SensitivityResult r =
          analysis::sensitivity_threshold(an_phi, tpos, tneg, gain);
      out << "phi_prev,theta_pos,theta_neg,gain,delta_phi_pos,delta_phi_neg\n"
          << an_phi << ',' << tpos << ',' << tneg << ',' << gain << ','
          << r.delta_phi_pos << ',' << r.delta_phi_neg << "\n";
      return 0;
    }

    sim::SensorConfig c = doc.sensor;
    if (an_tpos) c.theta_pos_mean = *an_tpos;
    if (an_tneg) c.theta_neg_mean = *an_tneg;
    if (an_gain) c.gain = *an_gain;
    const PixelMap background =
        PixelMap::Constant(c.height, c.width,
                           backgrounds.empty() ? 1000.0 : backgrounds.front());

    if (an_task == "falarm") {
      const analysis::FalseAlarmReport report =
          analysis::false_alarm_rate(c, background, an_steps);
      out << "source,rate\n";
      for (const auto& [name, rate] : report.rates) {
        out << name << ',' << rate << "\n";
      }
      return 0;
    }
    if (an_task == "latency") {
      std::vector<Timestamp> refractories;
      for (double r : parse_list(an_refractories)) {
        refractories.push_back(static_cast<Timestamp>(r));
      }
      if (refractories.empty()) {
        refractories = {c.dt, 2 * c.dt, 5 * c.dt, 10 * c.dt};
      }
      out << "refractory_us,rate,ratio,expected_ratio\n";
      for (const analysis::LatencyPoint& p :
           analysis::latency_scaling(c, background, refractories, an_steps)) {
        out << p.refractory << ',' << p.rate << ',' << p.ratio << ','
            << p.expected << "\n";
      }
      return 0;
    }
    if (an_task == "detection") {
      out << "impulse,probability\n"
          << an_impulse << ','
          << analysis::detection_probability(c, background, an_impulse,
                                             an_trials)
          << "\n";
      return 0;
    }

    std::vector<double> thresholds = parse_list(an_thresholds);
    if (thresholds.empty()) thresholds = {c.theta_pos_mean};
    if (an_task == "roc") {
      const analysis::RocCurve curve =
          analysis::roc_curve(c, background, an_impulse, thresholds, an_trials);
      out << "threshold,false_alarm,detection\n";
      for (std::size_t i = 0; i < curve.sweep_values.size(); ++i) {
        out << curve.sweep_values[i] << ',' << curve.points[i].first << ','
            << curve.points[i].second << "\n";
      }
      return 0;
    }

    std::vector<double> impulses = parse_list(an_impulses);
    if (impulses.empty()) impulses = {an_impulse};
    const analysis::AucGrid grid = analysis::auc_grid(
        c, backgrounds.empty() ? std::vector<double>{1000.0} : backgrounds,
        impulses, thresholds, an_trials, common.threads);
    if (an_task == "aucgrid") {
      out << "impulse,threshold,auc\n";
      for (std::size_t i = 0; i < impulses.size(); ++i) {
        for (std::size_t j = 0; j < thresholds.size(); ++j) {
          out << impulses[i] << ',' << thresholds[j] << ','
              << grid.auc(Eigen::Index(i), Eigen::Index(j)) << "\n";
        }
      }
      return 0;
    }
    const analysis::OperatingPoint p =
        analysis::optimal_operating_point(grid, an_impulse);
    out << "impulse,threshold,auc\n"
        << p.impulse << ',' << p.threshold << ',' << p.auc << "\n";
    return 0;
  }

  if (conv_cmd->parsed()) {
    const auto ext = [](const std::string& p) {
      const auto dot = p.find_last_of('.');
      return dot == std::string::npos ? std::string() : p.substr(dot);
    };
    const std::string in_ext = ext(conv_in);
    const std::string out_ext = ext(conv_out);
    const bool in_frames = in_ext == ".efv";
    const bool out_frames = out_ext == ".efv";
    if (in_frames && out_frames) {
      std::cerr << "frames->frames conversion is a copy; nothing to do\n";
      return 1;
    }
    if (in_frames) {
      const EventFrameVolume volume = io::read_frames_bin(conv_in);
      write_events(frames_to_events(volume), conv_out);
    } else if (out_frames) {
      if (conv_bins < 1) {
        std::cerr << "events->frames conversion needs --bins >= 1\n";
        return 1;
      }
      FrameMode mode;
      if (conv_frame_mode == "polarity") mode = FrameMode::polarity;
      else if (conv_frame_mode == "count") mode = FrameMode::count;
      else {
        std::cerr << "unknown --frame-mode value: " << conv_frame_mode << "\n";
        return 1;
      }
      const EventStream stream = read_events(conv_in, doc);
      io::write_frames_bin(events_to_frames(stream, conv_bins, mode),
                           conv_out);
    } else {
      write_events(read_events(conv_in, doc), conv_out);
    }
    return 0;
  }

  if (grad_cmd->parsed()) {
    sim::SensorConfig c = doc.sensor;
    c.width = grad_w;
    c.height = grad_h;
    c.shot_noise = false;
    c.sigma_dark = 0.0;
    c.leak_chance = 0.0;
    c.hot_pixel_fraction = 0.0;
    c.theta_sigma = 0.0;

    FluxSequence flux;
    flux.t0 = 0;
    flux.dt = c.dt;
    RngStream rng(c.seed, static_cast<std::uint64_t>(RngTag::test));
    for (int f = 0; f < grad_frames; ++f) {
      PixelMap frame(c.height, c.width);
      for (Eigen::Index y = 0; y < frame.rows(); ++y) {
        for (Eigen::Index x = 0; x < frame.cols(); ++x) {
          frame(y, x) = 20.0 + 60.0 * rng.uniform();
        }
      }
      flux.frames.push_back(std::move(frame));
    }

    diff::RelaxationConfig relax;
    relax.steepness = grad_k;
    const diff::GradCheckReport report =
        diff::grad_check(c, flux, relax, grad_tol);
    for (const auto& group : report.groups) {
      std::cout << (group.pass ? "PASS" : "FAIL") << "  " << group.name
                << "  max_rel_error=" << group.max_rel_error << "\n";
    }
    std::cout << (report.pass ? "PASS" : "FAIL")
              << "  overall  max_rel_error=" << report.max_rel_error
              << "  tolerance=" << grad_tol << "\n";
    return report.pass ? 0 : 2;
  }

  std::cerr << app.help();
  return 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
  try {
    return run_impl(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace evtwin::cli
