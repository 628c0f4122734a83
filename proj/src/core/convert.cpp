#include "evtwin/core/convert.hpp"

#include <algorithm>

namespace evtwin {

void validate_stream(const EventStream& stream) {
  if (stream.width <= 0 || stream.height <= 0) {
    throw Error(ErrorCode::DimensionMismatch, "stream has no geometry");
  }
  for (std::size_t i = 0; i < stream.records.size(); ++i) {
    const EventRecord& r = stream.records[i];
    if (r.p != 1 && r.p != -1) {
      throw Error(ErrorCode::BadPolarity,
                  "record " + std::to_string(i) + ": polarity " +
                      std::to_string(int(r.p)) + " not in {-1,+1}");
    }
    if (r.x >= stream.width || r.y >= stream.height) {
      throw Error(ErrorCode::OutOfBounds,
                  "record " + std::to_string(i) + ": pixel (" +
                      std::to_string(r.x) + "," + std::to_string(r.y) +
                      ") outside " + std::to_string(stream.width) + "x" +
                      std::to_string(stream.height));
    }
    if (r.t < 0) {
      throw Error(ErrorCode::BadTimestamp,
                  "record " + std::to_string(i) + ": negative timestamp");
    }
  }
}

EventStream sort_and_validate(const EventStream& stream) {
  validate_stream(stream);
  EventStream out = stream;
  std::stable_sort(out.records.begin(), out.records.end(), event_order_less);
  return out;
}

namespace {

void require_sorted_by_time(const EventStream& stream) {
  for (std::size_t i = 1; i < stream.records.size(); ++i) {
    if (stream.records[i].t < stream.records[i - 1].t) {
      throw Error(ErrorCode::UnsortedStream,
                  "stream not sorted by timestamp at record " +
                      std::to_string(i));
    }
  }
}

}  // namespace

EventFrameVolume events_to_frames(const EventStream& stream, int n_bins,
                                  FrameMode mode,
                                  std::optional<BinSpec> bins) {
  if (n_bins < 1) {
    throw Error(ErrorCode::BadSpec, "n_bins must be >= 1");
  }
  validate_stream(stream);
  require_sorted_by_time(stream);

  BinSpec grid;
  if (bins) {
    grid = *bins;
    if (grid.dt_bin < 1) {
      throw Error(ErrorCode::BadSpec, "dt_bin must be >= 1");
    }
  } else if (stream.empty()) {
    if (n_bins > 1) {
      throw Error(ErrorCode::EmptyStream,
                  "cannot infer " + std::to_string(n_bins) +
                      " bins from a stream with no time extent");
    }
    grid = {0, std::max<Timestamp>(stream.dt, 1)};
  } else {
    const Timestamp first = stream.records.front().t;
    const Timestamp span = stream.records.back().t - first;
    if (n_bins == 1) {
      grid = {first, std::max<Timestamp>(span > 0 ? span : stream.dt, 1)};
    } else {
      if (span == 0) {
        throw Error(ErrorCode::EmptyStream,
                    "cannot infer " + std::to_string(n_bins) +
                        " bins from a stream with no time extent");
      }
      const Timestamp width = span / (n_bins - 1);
      if (width < 1) {
        throw Error(ErrorCode::BadSpec,
                    "stream span too small for " + std::to_string(n_bins) +
                        " bins");
      }
      grid = {first, width};
    }
  }

  EventFrameVolume volume;
  volume.mode = mode;
  volume.t0 = grid.t0;
  volume.dt_bin = grid.dt_bin;
  volume.frames.assign(static_cast<std::size_t>(n_bins),
                       PolarityMap::Zero(stream.height, stream.width));

  for (const EventRecord& r : stream.records) {
    Timestamp rel = r.t - grid.t0;
    if (rel < 0) rel = 0;
    const auto bin = std::min<Timestamp>(rel / grid.dt_bin, n_bins - 1);
    PolarityMap& frame = volume.frames[static_cast<std::size_t>(bin)];
    if (mode == FrameMode::polarity) {
      frame(r.y, r.x) = r.p;
    } else {
      frame(r.y, r.x) += r.p;
    }
  }
  return volume;
}

EventStream frames_to_events(const EventFrameVolume& volume) {
  if (volume.mode != FrameMode::polarity) {
    throw Error(ErrorCode::NotPolarityMode,
                "frames_to_events requires a polarity-mode volume");
  }
  EventStream stream;
  stream.width = volume.width();
  stream.height = volume.height();
  stream.dt = volume.dt_bin;
  for (std::size_t n = 0; n < volume.frames.size(); ++n) {
    const PolarityMap& frame = volume.frames[n];
    const Timestamp t = volume.t0 + static_cast<Timestamp>(n) * volume.dt_bin;
    for (Eigen::Index y = 0; y < frame.rows(); ++y) {
      for (Eigen::Index x = 0; x < frame.cols(); ++x) {
        const std::int32_t v = frame(y, x);
        if (v == 0) continue;
        if (v != 1 && v != -1) {
          throw Error(ErrorCode::NotPolarityMode,
                      "polarity volume holds value " + std::to_string(v));
        }
        stream.records.push_back(EventRecord{
            t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
            static_cast<std::int8_t>(v)});
      }
    }
  }
  std::sort(stream.records.begin(), stream.records.end(), event_order_less);
  return stream;
}

}  // namespace evtwin
