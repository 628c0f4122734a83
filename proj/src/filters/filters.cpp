#include "evtwin/filters/filters.hpp"

#include <algorithm>
#include <vector>

#include "evtwin/diff/safe_log.hpp"

namespace evtwin::filters {

namespace {

void require_sorted(const EventStream& stream) {
  for (std::size_t i = 1; i < stream.records.size(); ++i) {
    if (stream.records[i].t < stream.records[i - 1].t) {
      throw Error(ErrorCode::UnsortedStream,
                  "stream not sorted by timestamp at record " +
                      std::to_string(i));
    }
  }
}

EventStream like(const EventStream& stream) {
  EventStream out;
  out.width = stream.width;
  out.height = stream.height;
  out.dt = stream.dt;
  return out;
}

}  // namespace

void validate(const FilterParams& params) {
  auto fail = [](const char* msg) {
    throw Error(ErrorCode::InvariantViolation, msg);
  };
  if (params.baf_dt < 0 || params.ief_t_minus < 0 || params.ief_t_plus < 0 ||
      params.ynoise_dt < 0) {
    fail("filter windows must be >= 0");
  }
  if (params.baf_radius < 1 || params.ynoise_radius < 1) {
    fail("filter radii must be >= 1");
  }
  if (params.ynoise_coarse_min < 1 || params.ynoise_hot_max < 1) {
    fail("filter counts must be >= 1");
  }
}

EventStream filter_polarity(const EventStream& stream, PolarityKeep keep) {
  EventStream out = like(stream);
  for (const EventRecord& r : stream.records) {
    const bool selected = keep == PolarityKeep::both ||
                          (keep == PolarityKeep::positive && r.p > 0) ||
                          (keep == PolarityKeep::negative && r.p < 0);
    if (selected) out.records.push_back(r);
  }
  return out;
}

EventStream filter_baf(const EventStream& stream, const FilterParams& params) {
  validate(params);
  require_sorted(stream);
  TimestampMap map(stream.width, stream.height);
  EventStream out = like(stream);
  for (const EventRecord& r : stream.records) {
    bool supported = false;
    const int r0 = params.baf_radius;
    for (int dy = -r0; dy <= r0 && !supported; ++dy) {
      for (int dx = -r0; dx <= r0; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = int(r.x) + dx;
        const int ny = int(r.y) + dy;
        if (nx < 0 || ny < 0 || nx >= stream.width || ny >= stream.height) {
          continue;
        }
        const Timestamp last = map.latest(nx, ny);
        if (last != TimestampMap::kNever && last >= r.t - params.baf_dt) {
          supported = true;
          break;
        }
      }
    }
    if (supported) out.records.push_back(r);
    map.record(r);
  }
  return out;
}

EventStream filter_ief(const EventStream& stream, const FilterParams& params) {
  validate(params);
  require_sorted(stream);

  // Per-pixel event indices, in stream order.
  std::vector<std::vector<std::size_t>> per_pixel(
      static_cast<std::size_t>(stream.width) *
      static_cast<std::size_t>(stream.height));
  for (std::size_t i = 0; i < stream.records.size(); ++i) {
    const EventRecord& r = stream.records[i];
    per_pixel[std::size_t(r.y) * std::size_t(stream.width) + r.x].push_back(i);
  }

  std::vector<char> keep(stream.records.size(), 0);
  for (const auto& idx : per_pixel) {
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const EventRecord& e = stream.records[idx[a]];
      for (std::size_t b = 0; b < idx.size(); ++b) {
        if (b == a) continue;
        const EventRecord& c = stream.records[idx[b]];
        if (!params.ief_polarity_agnostic && c.p != e.p) continue;
        const bool before = c.t < e.t && c.t >= e.t - params.ief_t_minus;
        const bool after = c.t > e.t && c.t <= e.t + params.ief_t_plus;
        if (before || after) {
          keep[idx[a]] = 1;
          break;
        }
      }
    }
  }

  EventStream out = like(stream);
  for (std::size_t i = 0; i < stream.records.size(); ++i) {
    if (keep[i]) out.records.push_back(stream.records[i]);
  }
  return out;
}

EventStream filter_ynoise(const EventStream& stream,
                          const FilterParams& params) {
  validate(params);
  require_sorted(stream);
  const auto n = stream.records.size();

  // For each event, count window companions: neighborhood (any pixel within
  // the radius, the event itself excluded) and the split into same-pixel vs
  // other-pixel used by the fine phase.
  std::vector<int> density(n, 0), self_count(n, 1), other_count(n, 0);
  std::size_t lo = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const EventRecord& e = stream.records[i];
    while (stream.records[lo].t < e.t - params.ynoise_dt) ++lo;
    for (std::size_t j = lo; j < n; ++j) {
      const EventRecord& c = stream.records[j];
      if (c.t > e.t + params.ynoise_dt) break;
      if (j == i) continue;
      const bool same_pixel = c.x == e.x && c.y == e.y;
      const bool in_radius =
          std::abs(int(c.x) - int(e.x)) <= params.ynoise_radius &&
          std::abs(int(c.y) - int(e.y)) <= params.ynoise_radius;
      if (same_pixel) {
        ++self_count[i];
        ++density[i];
      } else if (in_radius) {
        ++other_count[i];
        ++density[i];
      }
    }
  }

  EventStream out = like(stream);
  for (std::size_t i = 0; i < n; ++i) {
    if (density[i] < params.ynoise_coarse_min) continue;  // coarse phase
    const bool hot = self_count[i] > params.ynoise_hot_max &&
                     other_count[i] < params.ynoise_coarse_min;
    if (hot) continue;  // fine phase
    out.records.push_back(stream.records[i]);
  }
  return out;
}

namespace {

PixelMap frame_support(const EventFrameVolume& volume,
                       const FilterParams& params, std::size_t n) {
  const int w = volume.width();
  const int h = volume.height();
  const auto window =
      static_cast<std::size_t>(params.baf_dt / std::max<Timestamp>(
                                                   volume.dt_bin, 1));
  PixelMap support = PixelMap::Zero(h, w);
  const std::size_t first = n > window ? n - window : 0;
  for (std::size_t m = first; m < n; ++m) {
    const PolarityMap& frame = volume.frames[m];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (frame(y, x) == 0) continue;
        const int r0 = params.baf_radius;
        for (int dy = -r0; dy <= r0; ++dy) {
          for (int dx = -r0; dx <= r0; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx;
            const int ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            support(ny, nx) += 1.0;
          }
        }
      }
    }
  }
  return support;
}

}  // namespace

EventFrameVolume filter_baf_frames(const EventFrameVolume& volume,
                                   const FilterParams& params) {
  validate(params);
  if (volume.mode != FrameMode::polarity) {
    throw Error(ErrorCode::NotPolarityMode,
                "frame-form BAF requires a polarity-mode volume");
  }
  EventFrameVolume out = volume;
  for (std::size_t n = 0; n < volume.frames.size(); ++n) {
    const PixelMap support = frame_support(volume, params, n);
    out.frames[n] =
        volume.frames[n] * (support >= 1.0).cast<std::int32_t>();
  }
  return out;
}

std::vector<PixelMap> baf_frames_soft(const EventFrameVolume& volume,
                                      const FilterParams& params,
                                      double steepness) {
  validate(params);
  if (volume.mode != FrameMode::polarity) {
    throw Error(ErrorCode::NotPolarityMode,
                "frame-form BAF requires a polarity-mode volume");
  }
  if (!(steepness > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "steepness must be > 0");
  }
  std::vector<PixelMap> out;
  out.reserve(volume.frames.size());
  for (std::size_t n = 0; n < volume.frames.size(); ++n) {
    const PixelMap mask =
        frame_support(volume, params, n).unaryExpr([steepness](double s) {
          return diff::soft_indicator(s - 0.5, steepness);
        });
    out.push_back(volume.frames[n].cast<double>() * mask);
  }
  return out;
}

}  // namespace evtwin::filters
