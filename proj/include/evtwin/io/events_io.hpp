#pragma once

#include <cstdint>
#include <string>

#include "evtwin/core/types.hpp"

namespace evtwin::io {

/// Binary event file header, stored packed little-endian in field order
/// (22 bytes), followed by one 16-byte record per event:
/// t u64, x u16, y u16, p s8, 3 pad bytes.
struct EventFileHeader {
  static constexpr char kMagic[4] = {'E', 'V', 'T', '1'};
  static constexpr std::uint16_t kVersion = 1;

  std::uint16_t version = kVersion;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint32_t dt = 0;
  std::uint64_t count = 0;
};

constexpr std::size_t kEventHeaderSize = 22;
constexpr std::size_t kEventRecordSize = 16;

/// Text form: header line "t,x,y,p", one row per event. The reader ignores
/// any extra trailing columns (the point-cloud export reuses the layout).
void write_events_csv(const EventStream& stream, const std::string& path);
EventStream read_events_csv(const std::string& path, int width, int height,
                            Timestamp dt);

void write_events_bin(const EventStream& stream, const std::string& path);
EventStream read_events_bin(const std::string& path);

/// "csv" or "bin" from the file extension (.csv -> csv, anything else bin).
std::string guess_events_format(const std::string& path);

}  // namespace evtwin::io
