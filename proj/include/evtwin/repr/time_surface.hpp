#pragma once

#include <optional>

#include "evtwin/core/types.hpp"

namespace evtwin::repr {

enum class SurfaceMode { exponential, count, average, average_abs };
enum class PolarityMode { sensitive, agnostic };

/// Spatial sub-rectangle; pixels outside are left at 0.
struct SurfaceWindow {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

struct TimeSurfaceSpec {
  SurfaceMode mode = SurfaceMode::exponential;
  double tau = 10000.0;            // decay constant, microseconds
  Timestamp t_eval = 0;            // evaluation time (exponential mode)
  std::optional<SurfaceWindow> window;
  PolarityMode polarity_mode = PolarityMode::sensitive;
};

/// Per-pixel surface over the full sensor:
///  - exponential: exp(-(t_eval - t_last)/tau) of the most recent event,
///    multiplied by its polarity when sensitive;
///  - count: number of events at the pixel;
///  - average: mean event polarity (0 when silent);
///  - average_abs: mean |polarity| (1 on any active pixel).
PixelMap time_surface(const EventStream& stream, const TimeSurfaceSpec& spec);

}  // namespace evtwin::repr
