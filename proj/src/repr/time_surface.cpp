#include "evtwin/repr/time_surface.hpp"

#include <cmath>

namespace evtwin::repr {

namespace {

void require_sorted(const EventStream& stream) {
  for (std::size_t i = 1; i < stream.records.size(); ++i) {
    if (stream.records[i].t < stream.records[i - 1].t) {
      throw Error(ErrorCode::UnsortedStream, "stream not sorted by timestamp");
    }
  }
}

}  // namespace

PixelMap time_surface(const EventStream& stream, const TimeSurfaceSpec& spec) {
  require_sorted(stream);
  if (spec.mode == SurfaceMode::exponential && !(spec.tau > 0.0)) {
    throw Error(ErrorCode::BadSpec, "exponential surface needs tau > 0");
  }
  SurfaceWindow win{0, 0, stream.width, stream.height};
  if (spec.window) {
    win = *spec.window;
    if (win.x0 < 0 || win.y0 < 0 || win.width < 1 || win.height < 1 ||
        win.x0 + win.width > stream.width ||
        win.y0 + win.height > stream.height) {
      throw Error(ErrorCode::BadSpec, "surface window outside sensor bounds");
    }
  }
  auto inside = [&](const EventRecord& r) {
    return r.x >= win.x0 && r.x < win.x0 + win.width && r.y >= win.y0 &&
           r.y < win.y0 + win.height;
  };

  PixelMap surface = PixelMap::Zero(stream.height, stream.width);

  switch (spec.mode) {
    case SurfaceMode::exponential: {
      TimestampGrid last =
          TimestampGrid::Constant(stream.height, stream.width, -1);
      PolarityMap last_p = PolarityMap::Zero(stream.height, stream.width);
      for (const EventRecord& r : stream.records) {
        if (!inside(r)) continue;
        if (r.t > spec.t_eval) {
          throw Error(ErrorCode::BadSpec,
                      "t_eval precedes an event in the stream");
        }
        last(r.y, r.x) = r.t;
        last_p(r.y, r.x) = r.p;
      }
      for (Eigen::Index y = 0; y < surface.rows(); ++y) {
        for (Eigen::Index x = 0; x < surface.cols(); ++x) {
          if (last(y, x) < 0) continue;
          const double w =
              std::exp(-double(spec.t_eval - last(y, x)) / spec.tau);
          surface(y, x) =
              spec.polarity_mode == PolarityMode::sensitive
                  ? w * last_p(y, x)
                  : w;
        }
      }
      break;
    }
    case SurfaceMode::count: {
      for (const EventRecord& r : stream.records) {
        if (inside(r)) surface(r.y, r.x) += 1.0;
      }
      break;
    }
    case SurfaceMode::average:
    case SurfaceMode::average_abs: {
      PixelMap counts = PixelMap::Zero(stream.height, stream.width);
      for (const EventRecord& r : stream.records) {
        if (!inside(r)) continue;
        counts(r.y, r.x) += 1.0;
        surface(r.y, r.x) +=
            spec.mode == SurfaceMode::average ? double(r.p) : std::fabs(r.p);
      }
      surface = (counts > 0.0).select(surface / counts.max(1.0), 0.0);
      break;
    }
  }
  return surface;
}

}  // namespace evtwin::repr
