#pragma once

#include <string>
#include <vector>

#include "evtwin/core/types.hpp"
#include "evtwin/diff/safe_log.hpp"
#include "evtwin/sim/config.hpp"

namespace evtwin::diff {

/// Sigmoid relaxation settings. use_hard_forward swaps the forward outputs
/// for the hard simulator's polarities while the recorded tape keeps the
/// soft derivatives (straight-through style).
struct RelaxationConfig {
  double steepness = 20.0;  // k > 0
  bool use_hard_forward = false;
};

/// Gradients of a scalar loss with respect to the physical parameters.
struct GradientBundle {
  PixelMap d_theta_pos;            // dL/dT+ per pixel
  PixelMap d_theta_neg;            // dL/dT- per pixel
  double d_gain = 0.0;             // dL/dA
  std::vector<PixelMap> d_flux;    // dL/dPhi, one map per input frame
};

/// Recorded forward pass. One entry per simulation step holds everything
/// the hand-written backward pass needs; raw voltages carry one extra
/// leading entry for the initial reference frame.
struct ForwardTape {
  sim::SensorConfig config;
  RelaxationConfig relax;
  int n_frames = 0;

  std::vector<PixelMap> soft_out;   // step outputs s+ - s-, masked
  std::vector<PolarityMap> hard_out;

  // per step j (index 0 <-> frame 1):
  std::vector<PixelMap> s_pos;      // sigmoid of k*(dv - T+)
  std::vector<PixelMap> s_neg;      // sigmoid of k*(T- - dv)
  std::vector<PixelMap> dv;         // raw voltage minus reference
  std::vector<PixelMap> ref_prev;   // reference entering the step
  std::vector<PixelMap> mask;       // 1 where past refractory, else 0

  // per frame j (index 0 <-> frame 0):
  std::vector<PixelMap> raw_v;      // min(gain * safe_log(J), L)
  std::vector<PixelMap> current;    // J after noise
  std::vector<PixelMap> log_j;      // safe_log of the log argument
  std::vector<PixelMap> unsaturated;  // 1 where the min() kept the log branch

  bool empty() const { return soft_out.empty(); }
  const std::vector<PixelMap>& outputs() const { return soft_out; }
};

/// Runs the relaxed forward model over a flux sequence. In soft mode the
/// reference voltage follows the smooth recursion
///   ref_j = g * v_j + (1 - g) * ref_{j-1},   g = mask * (s+ + s-),
/// so the recorded outputs are a differentiable function of thresholds,
/// gain and flux. In hard-forward mode the outputs and reference updates
/// are exactly the simulator's (bit-identical under equal config/seed)
/// while the tape still records the soft quantities for the backward pass.
ForwardTape relaxed_forward(const sim::SensorConfig& config,
                            const FluxSequence& flux,
                            const RelaxationConfig& relax);

/// Same, with explicit per-pixel threshold maps instead of sampled ones.
ForwardTape relaxed_forward_with(const sim::SensorConfig& config,
                                 const FluxSequence& flux,
                                 const RelaxationConfig& relax,
                                 const PixelMap& theta_pos,
                                 const PixelMap& theta_neg);

/// Chain-rule accumulation through the recorded tape. `upstream` holds
/// dL/d(soft output) per step. Throws Error{MissingTape} on an empty tape.
GradientBundle backward(const ForwardTape& tape,
                        const std::vector<PixelMap>& upstream);

struct GradCheckGroup {
  std::string name;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_rel_error = 0.0;
  bool pass = true;
};

/// Central-finite-difference verification (h = 1e-4) of backward() against
/// the loss sum(soft output^2) for the threshold maps, the gain, and a
/// seeded sample of flux entries. Requires noise off and soft forward mode.
GradCheckReport grad_check(const sim::SensorConfig& config,
                           const FluxSequence& flux,
                           const RelaxationConfig& relax, double tolerance,
                           int n_flux_samples = 10);

}  // namespace evtwin::diff
