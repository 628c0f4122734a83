#pragma once

#include <vector>

#include "evtwin/core/types.hpp"

namespace evtwin::filters {

/// Last-event timestamps per pixel, one channel per polarity (0 = negative,
/// 1 = positive). Untouched pixels hold kNever.
struct TimestampMap {
  static constexpr Timestamp kNever = -1;

  TimestampGrid neg;
  TimestampGrid pos;

  TimestampMap(int width, int height)
      : neg(TimestampGrid::Constant(height, width, kNever)),
        pos(TimestampGrid::Constant(height, width, kNever)) {}

  void record(const EventRecord& r) {
    (r.p > 0 ? pos : neg)(r.y, r.x) = r.t;
  }

  /// Most recent timestamp of either polarity at (x, y), or kNever.
  Timestamp latest(int x, int y) const {
    return std::max(neg(y, x), pos(y, x));
  }
};

struct FilterParams {
  Timestamp baf_dt = 10000;       // BAF support window
  int baf_radius = 1;             // neighborhood radius (1 -> 3x3)
  Timestamp ief_t_minus = 5000;   // IEF lookback window
  Timestamp ief_t_plus = 5000;    // IEF lookahead window
  bool ief_polarity_agnostic = false;
  Timestamp ynoise_dt = 10000;    // density window
  int ynoise_radius = 1;          // density radius
  int ynoise_coarse_min = 2;      // minimum neighborhood density
  int ynoise_hot_max = 10;        // per-pixel rate above which a pixel
                                  // with a silent neighborhood is hot
};

void validate(const FilterParams& params);

enum class PolarityKeep { positive, negative, both };

/// Subsequence of records whose polarity is selected; order preserved.
EventStream filter_polarity(const EventStream& stream, PolarityKeep keep);

/// Background activity filter: one chronological pass over a TimestampMap.
/// An event survives iff a neighboring pixel (radius baf_radius, own pixel
/// excluded) saw a prior event of either polarity within baf_dt. Every
/// event updates the map whether kept or not.
EventStream filter_baf(const EventStream& stream, const FilterParams& params);

/// Inceptive events filter: keeps an event iff the same pixel has a
/// companion event (same polarity, or any when polarity-agnostic) within
/// [t - t_minus, t) or (t, t + t_plus]. The event's own timestamp never
/// counts as its companion.
EventStream filter_ief(const EventStream& stream, const FilterParams& params);

/// Density filter in two phases: coarse (keep events with at least
/// ynoise_coarse_min other events in the spatiotemporal window), then fine
/// (drop survivors at pixels firing more than ynoise_hot_max times inside
/// the window while every other pixel in the neighborhood stays below
/// coarse_min -- the hot-pixel signature).
EventStream filter_ynoise(const EventStream& stream,
                          const FilterParams& params);

/// Frame-form BAF: support is the count of nonzero cells over the previous
/// floor(baf_dt / dt_bin) bins in the spatial neighborhood (center pixel
/// excluded); cells are kept by multiplying with the support >= 1 mask.
EventFrameVolume filter_baf_frames(const EventFrameVolume& volume,
                                   const FilterParams& params);

/// Differentiable variant of the frame-form BAF mask: support passed
/// through the logistic sigmoid centered at 0.5 with the given steepness,
/// returned as real-valued frames (volume * soft mask).
std::vector<PixelMap> baf_frames_soft(const EventFrameVolume& volume,
                                      const FilterParams& params,
                                      double steepness);

}  // namespace evtwin::filters
