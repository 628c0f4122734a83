#pragma once

#include <vector>

#include "evtwin/core/types.hpp"

namespace evtwin::repr {

enum class ReconstructionMode { event_driven, fixed_fps };
enum class SmoothingKind { none, gaussian, bilateral };

struct SmoothingSpec {
  SmoothingKind kind = SmoothingKind::none;
  double gaussian_sigma = 1.0;        // pixels
  double bilateral_sigma_space = 1.0; // pixels
  double bilateral_sigma_range = -1;  // < 0 -> 0.5 * theta_pos
};

struct ReconstructionOptions {
  double alpha = 0.0;                 // temporal decay rate, 1/us
  ReconstructionMode mode = ReconstructionMode::event_driven;
  Timestamp frame_interval = 10000;   // fixed_fps readout spacing
  SmoothingSpec smoothing;
};

struct IntensityReconstruction {
  std::vector<PixelMap> frames;       // log-intensity images
  std::vector<Timestamp> timestamps;  // readout time per frame
};

/// Continuous-time log-intensity estimate: each event decays its pixel to
/// the event time and adds the matching contrast threshold. Frames are read
/// out after every event timestamp (event_driven) or on a fixed grid
/// anchored at the first event (fixed_fps); at readout every pixel is
/// decayed to the readout time. Smoothing applies to emitted frames only.
IntensityReconstruction reconstruct_intensity(const EventStream& stream,
                                              double theta_pos,
                                              double theta_neg,
                                              const ReconstructionOptions& options);

/// Separable Gaussian blur, kernel radius ceil(3 sigma).
PixelMap gaussian_smooth(const PixelMap& image, double sigma);

/// Bilateral filter with Gaussian spatial and range kernels.
PixelMap bilateral_smooth(const PixelMap& image, double sigma_space,
                          double sigma_range);

}  // namespace evtwin::repr
