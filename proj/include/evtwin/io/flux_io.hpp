#pragma once

#include <string>

#include "evtwin/core/types.hpp"

namespace evtwin::io {

/// Raw flux volume "FLX1": magic, version u16, width u16, height u16,
/// n_frames u32, t0 u64, dt u32 (26-byte header, little-endian), then
/// n * width * height IEEE-754 binary32 samples, x varying slower than y
/// within a frame. Values are mean photons per pixel per interval.
void write_flux_volume(const FluxSequence& flux, const std::string& path);
FluxSequence read_flux_volume(const std::string& path);

/// Directory alternative: 16-bit (or 8-bit) binary portable graymaps,
/// lexicographically ordered, plus a sidecar "timing.txt" holding
/// "t0 = <us>" and "dt = <us>" lines. Sample values map directly to
/// photons.
FluxSequence read_flux_dir(const std::string& dir_path);

/// Dispatch: directories go through read_flux_dir, files through
/// read_flux_volume.
FluxSequence read_flux_any(const std::string& path);

/// Event frame volume "EFV1": magic, version u16, mode u8 (0 polarity,
/// 1 count), width u16, height u16, n_frames u32, t0 u64, dt_bin u32,
/// then n * width * height int32 samples in the flux sample order.
void write_frames_bin(const EventFrameVolume& volume, const std::string& path);
EventFrameVolume read_frames_bin(const std::string& path);

/// Plain CSV matrix (height rows, width columns) for surface and intensity
/// maps.
void write_matrix_csv(const PixelMap& map, const std::string& path);

}  // namespace evtwin::io
