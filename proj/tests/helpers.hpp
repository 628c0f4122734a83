#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evtwin/core/convert.hpp"
#include "evtwin/core/types.hpp"
#include "evtwin/sim/rng.hpp"

namespace evtwin::test {

/// Unique scratch directory under the system temp path, removed on exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("evtwin_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

 private:
  std::filesystem::path dir_;
};

inline EventStream random_stream(std::uint64_t seed, int width, int height,
                                 std::size_t n_events,
                                 Timestamp max_time = 100000) {
  RngStream rng(seed, static_cast<std::uint64_t>(RngTag::test), 1);
  EventStream stream;
  stream.width = width;
  stream.height = height;
  stream.dt = 1000;
  for (std::size_t i = 0; i < n_events; ++i) {
    EventRecord r;
    r.t = static_cast<Timestamp>(rng.next() % std::uint64_t(max_time + 1));
    r.x = static_cast<std::uint16_t>(rng.next() % std::uint64_t(width));
    r.y = static_cast<std::uint16_t>(rng.next() % std::uint64_t(height));
    r.p = rng.uniform() < 0.5 ? std::int8_t(-1) : std::int8_t(1);
    stream.records.push_back(r);
  }
  return sort_and_validate(stream);
}

/// Stream whose events sit on a regular K-point grid (first and last grid
/// point occupied, at most one event per pixel per bin): the domain where
/// events_to_frames / frames_to_events invert each other.
inline EventStream random_grid_stream(std::uint64_t seed, int width,
                                      int height, int n_bins,
                                      Timestamp bin_width) {
  RngStream rng(seed, static_cast<std::uint64_t>(RngTag::test), 2);
  EventStream stream;
  stream.width = width;
  stream.height = height;
  stream.dt = bin_width;
  for (int k = 0; k < n_bins; ++k) {
    const bool required = k == 0 || k == n_bins - 1;
    std::vector<bool> used(std::size_t(width) * std::size_t(height), false);
    const int draws = required ? 1 + int(rng.next() % 3) : int(rng.next() % 3);
    for (int d = 0; d < draws; ++d) {
      const auto x = std::uint16_t(rng.next() % std::uint64_t(width));
      const auto y = std::uint16_t(rng.next() % std::uint64_t(height));
      if (used[std::size_t(y) * width + x]) continue;
      used[std::size_t(y) * width + x] = true;
      EventRecord r;
      r.t = Timestamp(k) * bin_width;
      r.x = x;
      r.y = y;
      r.p = rng.uniform() < 0.5 ? std::int8_t(-1) : std::int8_t(1);
      stream.records.push_back(r);
    }
  }
  return sort_and_validate(stream);
}

inline bool is_subsequence(const EventStream& sub, const EventStream& full) {
  std::size_t j = 0;
  for (const EventRecord& r : sub.records) {
    while (j < full.records.size() && !(full.records[j] == r)) ++j;
    if (j == full.records.size()) return false;
    ++j;
  }
  return true;
}

}  // namespace evtwin::test
