#pragma once

#include <optional>

#include "evtwin/core/types.hpp"

namespace evtwin {

/// Checks every record against the stream geometry and polarity domain.
/// Throws Error{OutOfBounds, BadPolarity, BadTimestamp} on the first
/// violation; streams are never silently repaired.
void validate_stream(const EventStream& stream);

/// Returns a copy of `stream` sorted by (t, y, x, p) ascending after
/// validating every record.
EventStream sort_and_validate(const EventStream& stream);

/// Explicit bin grid for stream->frame conversion: bin k covers
/// [t0 + k*dt_bin, t0 + (k+1)*dt_bin), the final bin absorbing everything
/// later.
struct BinSpec {
  Timestamp t0 = 0;
  Timestamp dt_bin = 1;
};

/// Bins a sorted stream into an [N, 1, X, Y] volume.
///
/// Without an explicit BinSpec the grid is anchored at the first event and
/// dt_bin = span / (n_bins - 1): the n_bins grid points then cover the
/// stream so that a stream whose events sit on a regular grid maps each
/// grid time onto its own bin (which is what makes frames_to_events an
/// inverse on such streams). Polarity mode keeps the last event per
/// (bin, pixel); count mode sums polarities.
EventFrameVolume events_to_frames(const EventStream& stream, int n_bins,
                                  FrameMode mode,
                                  std::optional<BinSpec> bins = std::nullopt);

/// Expands a polarity-mode volume into a sorted stream, one record per
/// nonzero cell with t = t0 + bin_index * dt_bin.
EventStream frames_to_events(const EventFrameVolume& volume);

}  // namespace evtwin
