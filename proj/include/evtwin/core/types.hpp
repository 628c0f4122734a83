#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evtwin {

/// Timestamps and temporal resolutions are integer microseconds throughout.
using Timestamp = std::int64_t;

/// Dense per-pixel map, indexed map(y, x) with rows = height, cols = width.
template <typename Scalar>
using PixelMapT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using PixelMap = PixelMapT<double>;
using PolarityMap = PixelMapT<std::int32_t>;
using TimestampGrid = PixelMapT<std::int64_t>;
using BoolMap = PixelMapT<bool>;

enum class ErrorCode {
  OutOfBounds,
  BadPolarity,
  BadTimestamp,
  UnsortedStream,
  EmptyStream,
  NotPolarityMode,
  DimensionMismatch,
  NegativeFlux,
  NonMonotonicTime,
  MissingTape,
  NonPositiveLambda,
  NonPositiveGain,
  BadSpec,
  BadThresholds,
  DegenerateCurve,
  EmptyGrid,
  EmptyProfile,
  IoError,
  ParseError,
  BadMagic,
  TruncatedFile,
  UnknownKey,
  TypeMismatch,
  InvariantViolation,
};

/// Single exception type carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// One event: timestamp, pixel position and polarity (+1 brightness
/// increase, -1 decrease).
struct EventRecord {
  Timestamp t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Ordering used everywhere for event streams: (t, y, x, p) ascending.
inline bool event_order_less(const EventRecord& a, const EventRecord& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  return a.p < b.p;
}

/// Ordered event sequence with the sensor geometry it belongs to.
struct EventStream {
  std::vector<EventRecord> records;
  int width = 0;
  int height = 0;
  Timestamp dt = 1;  // simulation step the stream was produced with

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Photon-flux input: N frames of mean photons per pixel per interval on a
/// fixed grid starting at t0 with spacing dt.
struct FluxSequence {
  std::vector<PixelMap> frames;
  Timestamp t0 = 0;
  Timestamp dt = 1;

  int width() const { return frames.empty() ? 0 : static_cast<int>(frames.front().cols()); }
  int height() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }
  std::size_t size() const { return frames.size(); }
};

enum class FrameMode { polarity, count };

/// Structured [N, C=1, X, Y] event frames. Polarity mode stores {-1, 0, +1};
/// count mode stores summed polarities. Untouched pixels are 0.
struct EventFrameVolume {
  std::vector<PolarityMap> frames;
  FrameMode mode = FrameMode::polarity;
  Timestamp t0 = 0;
  Timestamp dt_bin = 1;

  int width() const { return frames.empty() ? 0 : static_cast<int>(frames.front().cols()); }
  int height() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }
  std::size_t size() const { return frames.size(); }
};

}  // namespace evtwin
