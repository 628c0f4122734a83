#include "evtwin/diff/relaxed.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "evtwin/sim/rng.hpp"
#include "evtwin/sim/simulator.hpp"

namespace evtwin::diff {

namespace {

PixelMap sigmoid_map(const PixelMap& u, double k) {
  return u.unaryExpr([k](double v) { return soft_indicator(v, k); });
}

}  // namespace

ForwardTape relaxed_forward_with(const sim::SensorConfig& config,
                                 const FluxSequence& flux,
                                 const RelaxationConfig& relax,
                                 const PixelMap& theta_pos,
                                 const PixelMap& theta_neg) {
  sim::validate(config);
  if (!(relax.steepness > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "steepness must be > 0");
  }
  if (flux.frames.empty()) {
    throw Error(ErrorCode::EmptyStream, "flux sequence holds no frames");
  }
  if (flux.width() != config.width || flux.height() != config.height) {
    throw Error(ErrorCode::DimensionMismatch,
                "flux dimensions do not match sensor configuration");
  }

  const double k = relax.steepness;
  const double scale = sim::well_capacity_log(config);
  const int n_frames = static_cast<int>(flux.frames.size());

  ForwardTape tape;
  tape.config = config;
  tape.relax = relax;
  tape.n_frames = n_frames;

  // Frame-wise voltage pipeline, recorded for the backward pass. Noise
  // draws use the very RNG keys the simulator uses, which is what makes
  // hard-forward mode bit-identical to sim::simulate.
  auto render_frame = [&](int j, bool quiet) {
    sim::SensorConfig c = config;
    if (quiet) {
      c.shot_noise = false;
      c.sigma_dark = 0.0;
    }
    PixelMap current = sim::photocurrent(flux.frames[j], c, std::uint64_t(j));
    if (c.sigma_dark > 0.0) {
      for (Eigen::Index y = 0; y < current.rows(); ++y) {
        for (Eigen::Index x = 0; x < current.cols(); ++x) {
          RngStream r = pixel_stream(
              c.seed, RngTag::dark, std::uint64_t(j),
              std::uint64_t(y) * std::uint64_t(current.cols()) +
                  std::uint64_t(x));
          current(y, x) += c.sigma_dark * r.normal();
        }
      }
    }
    tape.current.push_back(current);
    tape.log_j.push_back(current.unaryExpr([](double v) { return safe_log(v); }));
    PixelMap scaled = config.gain * tape.log_j.back();
    tape.unsaturated.push_back((scaled < scale).cast<double>());
    tape.raw_v.push_back(scaled.min(scale));
  };

  render_frame(0, /*quiet=*/true);

  // Hard state machine runs alongside to provide the latency mask, the
  // hard outputs, and (in hard-forward mode) the reference updates.
  sim::PixelState hard_state = sim::init_state(config, flux.frames.front(),
                                               flux.t0);
  hard_state.theta_pos = theta_pos;
  hard_state.theta_neg = theta_neg;

  PixelMap soft_ref = tape.raw_v.front();

  for (int j = 1; j < n_frames; ++j) {
    render_frame(j, /*quiet=*/false);
    const PixelMap& raw = tape.raw_v.back();

    const TimestampGrid lat_before = hard_state.t_lat;
    const Timestamp t_j = flux.t0 + static_cast<Timestamp>(j) * flux.dt;
    sim::StepResult hard =
        sim::step(hard_state, flux.frames[j], t_j, config);

    PixelMap mask = (lat_before <= t_j).cast<double>();
    PixelMap dv = raw - soft_ref;
    PixelMap s_pos = sigmoid_map(dv - theta_pos, k);
    PixelMap s_neg = sigmoid_map(theta_neg - dv, k);

    tape.ref_prev.push_back(soft_ref);
    tape.dv.push_back(dv);
    tape.s_pos.push_back(s_pos);
    tape.s_neg.push_back(s_neg);
    tape.mask.push_back(mask);
    tape.hard_out.push_back(hard.polarity);

    if (relax.use_hard_forward) {
      tape.soft_out.push_back(hard.polarity.cast<double>());
      // Forward reference follows the hard update rule so outputs stay
      // bit-identical to the simulator.
      PixelMap fired = (hard.polarity != 0).cast<double>();
      soft_ref = fired * raw + (1.0 - fired) * soft_ref;
    } else {
      tape.soft_out.push_back(mask * (s_pos - s_neg));
      PixelMap gate = mask * (s_pos + s_neg);
      soft_ref = gate * raw + (1.0 - gate) * soft_ref;
    }
  }
  return tape;
}

ForwardTape relaxed_forward(const sim::SensorConfig& config,
                            const FluxSequence& flux,
                            const RelaxationConfig& relax) {
  auto thresholds = sim::sample_thresholds(config);
  return relaxed_forward_with(config, flux, relax, thresholds.first,
                              thresholds.second);
}

GradientBundle backward(const ForwardTape& tape,
                        const std::vector<PixelMap>& upstream) {
  if (tape.empty()) {
    throw Error(ErrorCode::MissingTape, "backward called without a forward pass");
  }
  const int n_steps = static_cast<int>(tape.soft_out.size());
  if (static_cast<int>(upstream.size()) != n_steps) {
    throw Error(ErrorCode::DimensionMismatch,
                "upstream gradient count does not match recorded steps");
  }

  const double k = tape.relax.steepness;
  const sim::SensorConfig& config = tape.config;
  const PixelMap q = sim::quantum_efficiency_map(config);

  GradientBundle grads;
  grads.d_theta_pos = PixelMap::Zero(config.height, config.width);
  grads.d_theta_neg = PixelMap::Zero(config.height, config.width);
  grads.d_flux.assign(static_cast<std::size_t>(tape.n_frames),
                      PixelMap::Zero(config.height, config.width));

  // dL/d(raw voltage) routed through the frame pipeline shared by every
  // step: raw = min(gain * safe_log(J), L), J = Q * flux * qe (+ noise).
  // A Poisson-sampled frame is a blocked stochastic node: its flux gradient
  // is zero here (the score estimator covers that path), while gain and
  // threshold gradients still flow through the realized values. Frame 0 is
  // always rendered noise-free.
  auto push_raw_gradient = [&](int frame, const PixelMap& g_raw) {
    const PixelMap gate = tape.unsaturated[frame];
    grads.d_gain += (g_raw * gate * tape.log_j[frame]).sum();
    if (config.shot_noise && frame > 0) return;
    const PixelMap g_current =
        g_raw * gate * config.gain *
        tape.current[frame].unaryExpr(
            [](double v) { return safe_log_grad(v); });
    grads.d_flux[frame] += g_current * q * config.qe;
  };

  PixelMap g_ref = PixelMap::Zero(config.height, config.width);

  for (int j = n_steps - 1; j >= 0; --j) {
    const PixelMap& m = tape.mask[j];
    const PixelMap& sp = tape.s_pos[j];
    const PixelMap& sn = tape.s_neg[j];
    const PixelMap dsp = k * sp * (1.0 - sp);
    const PixelMap dsn = k * sn * (1.0 - sn);
    const PixelMap gate = m * (sp + sn);

    const PixelMap& g_out = upstream[static_cast<std::size_t>(j)];

    // ref_j = gate * raw_j + (1 - gate) * ref_{j-1}
    const PixelMap g_gate = g_ref * (tape.raw_v[j + 1] - tape.ref_prev[j]);

    // dv feeds both the output (s+ - s-) and the gate (s+ + s-).
    const PixelMap g_dv =
        g_out * m * (dsp + dsn) + g_gate * m * (dsp - dsn);

    grads.d_theta_pos += -(g_out + g_gate) * m * dsp;
    grads.d_theta_neg += (g_gate - g_out) * m * dsn;

    const PixelMap g_raw = g_dv + g_ref * gate;
    push_raw_gradient(j + 1, g_raw);

    g_ref = -g_dv + g_ref * (1.0 - gate);
  }

  // Remaining reference gradient belongs to the initial frame rendering.
  push_raw_gradient(0, g_ref);

  for (const PixelMap& g : grads.d_flux) {
    if (!g.isFinite().all()) {
      throw Error(ErrorCode::InvariantViolation,
                  "gradient bundle holds non-finite flux entries");
    }
  }
  if (!grads.d_theta_pos.isFinite().all() ||
      !grads.d_theta_neg.isFinite().all() || !std::isfinite(grads.d_gain)) {
    throw Error(ErrorCode::InvariantViolation,
                "gradient bundle holds non-finite values");
  }
  return grads;
}

namespace {

double loss_of(const ForwardTape& tape) {
  double loss = 0.0;
  for (const PixelMap& o : tape.soft_out) loss += (o * o).sum();
  return loss;
}

std::vector<PixelMap> loss_upstream(const ForwardTape& tape) {
  std::vector<PixelMap> up;
  up.reserve(tape.soft_out.size());
  for (const PixelMap& o : tape.soft_out) up.push_back(2.0 * o);
  return up;
}

double rel_error(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
  return std::fabs(a - b) / denom;
}

}  // namespace

GradCheckReport grad_check(const sim::SensorConfig& config,
                           const FluxSequence& flux,
                           const RelaxationConfig& relax, double tolerance,
                           int n_flux_samples) {
  if (relax.use_hard_forward) {
    throw Error(ErrorCode::BadSpec, "grad_check requires soft forward mode");
  }
  if (config.shot_noise || config.sigma_dark > 0.0 ||
      config.leak_chance > 0.0 || config.hot_pixel_fraction > 0.0) {
    throw Error(ErrorCode::BadSpec, "grad_check requires all noise off");
  }

  const double h = 1e-4;
  auto thresholds = sim::sample_thresholds(config);
  PixelMap theta_pos = thresholds.first;
  PixelMap theta_neg = thresholds.second;

  ForwardTape tape =
      relaxed_forward_with(config, flux, relax, theta_pos, theta_neg);
  GradientBundle grads = backward(tape, loss_upstream(tape));

  auto loss_with = [&](const PixelMap& tp, const PixelMap& tn,
                       const sim::SensorConfig& c, const FluxSequence& f) {
    return loss_of(relaxed_forward_with(c, f, relax, tp, tn));
  };

  GradCheckReport report;
  auto add_group = [&](const std::string& name, double err) {
    report.groups.push_back({name, err, err < tolerance});
    report.max_rel_error = std::max(report.max_rel_error, err);
    if (err >= tolerance) report.pass = false;
  };

  double err_pos = 0.0, err_neg = 0.0;
  for (Eigen::Index y = 0; y < theta_pos.rows(); ++y) {
    for (Eigen::Index x = 0; x < theta_pos.cols(); ++x) {
      {
        PixelMap tp = theta_pos;
        tp(y, x) = theta_pos(y, x) + h;
        const double up = loss_with(tp, theta_neg, config, flux);
        tp(y, x) = theta_pos(y, x) - h;
        const double dn = loss_with(tp, theta_neg, config, flux);
        err_pos = std::max(
            err_pos, rel_error(grads.d_theta_pos(y, x), (up - dn) / (2 * h)));
      }
      {
        PixelMap tn = theta_neg;
        tn(y, x) = theta_neg(y, x) + h;
        const double up = loss_with(theta_pos, tn, config, flux);
        tn(y, x) = theta_neg(y, x) - h;
        const double dn = loss_with(theta_pos, tn, config, flux);
        err_neg = std::max(
            err_neg, rel_error(grads.d_theta_neg(y, x), (up - dn) / (2 * h)));
      }
    }
  }
  add_group("theta_pos", err_pos);
  add_group("theta_neg", err_neg);

  {
    sim::SensorConfig c = config;
    c.gain = config.gain + h;
    const double up = loss_with(theta_pos, theta_neg, c, flux);
    c.gain = config.gain - h;
    const double dn = loss_with(theta_pos, theta_neg, c, flux);
    add_group("gain", rel_error(grads.d_gain, (up - dn) / (2 * h)));
  }

  {
    RngStream picker(config.seed, static_cast<std::uint64_t>(RngTag::test));
    double err_flux = 0.0;
    const int n = std::max(1, n_flux_samples);
    for (int s = 0; s < n; ++s) {
      const auto frame = static_cast<std::size_t>(picker.next() %
                                                  flux.frames.size());
      const auto y = static_cast<Eigen::Index>(picker.next() %
                                               std::uint64_t(config.height));
      const auto x = static_cast<Eigen::Index>(picker.next() %
                                               std::uint64_t(config.width));
      FluxSequence f = flux;
      const double base = flux.frames[frame](y, x);
      f.frames[frame](y, x) = base + h;
      const double up = loss_with(theta_pos, theta_neg, config, f);
      f.frames[frame](y, x) = base - h;
      const double dn = loss_with(theta_pos, theta_neg, config, f);
      err_flux = std::max(
          err_flux,
          rel_error(grads.d_flux[frame](y, x), (up - dn) / (2 * h)));
    }
    add_group("flux", err_flux);
  }

  return report;
}

}  // namespace evtwin::diff
