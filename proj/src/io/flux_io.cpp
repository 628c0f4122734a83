#include "evtwin/io/flux_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace evtwin::io {

namespace {

constexpr char kFluxMagic[4] = {'F', 'L', 'X', '1'};
constexpr char kFramesMagic[4] = {'E', 'F', 'V', '1'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(char((std::uint64_t(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const char* data) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= std::uint64_t(static_cast<unsigned char>(data[i])) << (8 * i);
  }
  return static_cast<T>(v);
}

void put_f32(std::string& out, float value) {
  put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(value));
}

float get_f32(const char* data) {
  return std::bit_cast<float>(get_le<std::uint32_t>(data));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for reading");
  }
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void dump(const std::string& buf, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace

void write_flux_volume(const FluxSequence& flux, const std::string& path) {
  if (flux.frames.empty()) {
    throw Error(ErrorCode::EmptyStream, "flux sequence holds no frames");
  }
  const int w = flux.width();
  const int h = flux.height();
  std::string buf;
  buf.reserve(26 + 4ull * flux.frames.size() * w * h);
  buf.append(kFluxMagic, 4);
  put_le<std::uint16_t>(buf, kVersion);
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(w));
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(h));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(flux.frames.size()));
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(flux.t0));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(flux.dt));
  for (const PixelMap& frame : flux.frames) {
    if (frame.cols() != w || frame.rows() != h) {
      throw Error(ErrorCode::DimensionMismatch, "ragged flux frames");
    }
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        put_f32(buf, static_cast<float>(frame(y, x)));
      }
    }
  }
  dump(buf, path);
}

FluxSequence read_flux_volume(const std::string& path) {
  const std::string buf = slurp(path);
  if (buf.size() < 26) {
    throw Error(ErrorCode::TruncatedFile, "file shorter than the header");
  }
  if (std::memcmp(buf.data(), kFluxMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "bad magic, expected FLX1");
  }
  const auto version = get_le<std::uint16_t>(buf.data() + 4);
  if (version != kVersion) {
    throw Error(ErrorCode::ParseError,
                "unsupported version " + std::to_string(version));
  }
  const int w = get_le<std::uint16_t>(buf.data() + 6);
  const int h = get_le<std::uint16_t>(buf.data() + 8);
  const auto n = get_le<std::uint32_t>(buf.data() + 10);
  FluxSequence flux;
  flux.t0 = static_cast<Timestamp>(get_le<std::uint64_t>(buf.data() + 14));
  flux.dt = static_cast<Timestamp>(get_le<std::uint32_t>(buf.data() + 22));
  if (n < 1 || w < 1 || h < 1) {
    throw Error(ErrorCode::DimensionMismatch, "degenerate flux dimensions");
  }
  if (buf.size() != 26 + 4ull * n * w * h) {
    throw Error(ErrorCode::TruncatedFile,
                "file size does not match the header dimensions");
  }
  const char* cursor = buf.data() + 26;
  for (std::uint32_t f = 0; f < n; ++f) {
    PixelMap frame(h, w);
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        const float v = get_f32(cursor);
        cursor += 4;
        if (v < 0.0f) {
          throw Error(ErrorCode::NegativeFlux,
                      "flux file holds a negative sample");
        }
        frame(y, x) = v;
      }
    }
    flux.frames.push_back(std::move(frame));
  }
  return flux;
}

namespace {

PixelMap read_pgm(const std::string& path) {
  const std::string buf = slurp(path);
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < buf.size()) {
      if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
        ++pos;
      } else if (buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    std::size_t start = pos;
    while (pos < buf.size() &&
           !std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    }
    if (start == pos) {
      throw Error(ErrorCode::ParseError, path + ": truncated graymap header");
    }
    return buf.substr(start, pos - start);
  };

  if (next_token() != "P5") {
    throw Error(ErrorCode::BadMagic, path + ": not a binary graymap (P5)");
  }
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
    throw Error(ErrorCode::ParseError, path + ": bad graymap dimensions");
  }
  ++pos;  // single whitespace after maxval
  const int bytes = maxval > 255 ? 2 : 1;
  if (buf.size() - pos < std::size_t(w) * std::size_t(h) * bytes) {
    throw Error(ErrorCode::TruncatedFile, path + ": truncated graymap data");
  }
  PixelMap frame(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // graymap samples are big-endian
      unsigned value = static_cast<unsigned char>(buf[pos++]);
      if (bytes == 2) {
        value = (value << 8) | static_cast<unsigned char>(buf[pos++]);
      }
      frame(y, x) = double(value);
    }
  }
  return frame;
}

}  // namespace

FluxSequence read_flux_dir(const std::string& dir_path) {
  namespace fs = std::filesystem;
  std::vector<std::string> frames;
  std::string timing;
  for (const auto& entry : fs::directory_iterator(dir_path)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() == ".pgm") {
      frames.push_back(entry.path().string());
    } else if (name == "timing.txt") {
      timing = entry.path().string();
    }
  }
  if (frames.empty()) {
    throw Error(ErrorCode::IoError, dir_path + " holds no .pgm frames");
  }
  if (timing.empty()) {
    throw Error(ErrorCode::IoError, dir_path + " is missing timing.txt");
  }
  std::sort(frames.begin(), frames.end());

  FluxSequence flux;
  std::ifstream tin(timing);
  std::string line;
  bool have_t0 = false, have_dt = false;
  while (std::getline(tin, line)) {
    std::stringstream row(line);
    std::string key, eq;
    long long value = 0;
    if (!(row >> key)) continue;
    if (key.empty() || key[0] == '#') continue;
    if (!(row >> eq >> value) || eq != "=") {
      throw Error(ErrorCode::ParseError, "timing.txt: bad line '" + line + "'");
    }
    if (key == "t0") {
      flux.t0 = value;
      have_t0 = true;
    } else if (key == "dt") {
      flux.dt = value;
      have_dt = true;
    } else {
      throw Error(ErrorCode::UnknownKey, "timing.txt: unknown key " + key);
    }
  }
  if (!have_t0 || !have_dt || flux.dt < 1) {
    throw Error(ErrorCode::ParseError, "timing.txt must set t0 and dt >= 1");
  }

  for (const std::string& path : frames) {
    flux.frames.push_back(read_pgm(path));
    if (flux.frames.back().rows() != flux.frames.front().rows() ||
        flux.frames.back().cols() != flux.frames.front().cols()) {
      throw Error(ErrorCode::DimensionMismatch,
                  path + ": frame dimensions differ from the first frame");
    }
  }
  return flux;
}

FluxSequence read_flux_any(const std::string& path) {
  if (std::filesystem::is_directory(path)) return read_flux_dir(path);
  return read_flux_volume(path);
}

void write_frames_bin(const EventFrameVolume& volume,
                      const std::string& path) {
  if (volume.frames.empty()) {
    throw Error(ErrorCode::EmptyStream, "frame volume holds no frames");
  }
  const int w = volume.width();
  const int h = volume.height();
  std::string buf;
  buf.append(kFramesMagic, 4);
  put_le<std::uint16_t>(buf, kVersion);
  buf.push_back(volume.mode == FrameMode::polarity ? '\0' : '\1');
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(w));
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(h));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(volume.frames.size()));
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(volume.t0));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(volume.dt_bin));
  for (const PolarityMap& frame : volume.frames) {
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        put_le<std::uint32_t>(buf,
                              static_cast<std::uint32_t>(frame(y, x)));
      }
    }
  }
  dump(buf, path);
}

EventFrameVolume read_frames_bin(const std::string& path) {
  const std::string buf = slurp(path);
  if (buf.size() < 27) {
    throw Error(ErrorCode::TruncatedFile, "file shorter than the header");
  }
  if (std::memcmp(buf.data(), kFramesMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "bad magic, expected EFV1");
  }
  const auto version = get_le<std::uint16_t>(buf.data() + 4);
  if (version != kVersion) {
    throw Error(ErrorCode::ParseError,
                "unsupported version " + std::to_string(version));
  }
  EventFrameVolume volume;
  volume.mode = buf[6] == '\0' ? FrameMode::polarity : FrameMode::count;
  const int w = get_le<std::uint16_t>(buf.data() + 7);
  const int h = get_le<std::uint16_t>(buf.data() + 9);
  const auto n = get_le<std::uint32_t>(buf.data() + 11);
  volume.t0 = static_cast<Timestamp>(get_le<std::uint64_t>(buf.data() + 15));
  volume.dt_bin =
      static_cast<Timestamp>(get_le<std::uint32_t>(buf.data() + 23));
  if (n < 1 || w < 1 || h < 1) {
    throw Error(ErrorCode::DimensionMismatch, "degenerate volume dimensions");
  }
  if (buf.size() != 27 + 4ull * n * w * h) {
    throw Error(ErrorCode::TruncatedFile,
                "file size does not match the header dimensions");
  }
  const char* cursor = buf.data() + 27;
  for (std::uint32_t f = 0; f < n; ++f) {
    PolarityMap frame(h, w);
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        frame(y, x) =
            static_cast<std::int32_t>(get_le<std::uint32_t>(cursor));
        cursor += 4;
        if (volume.mode == FrameMode::polarity &&
            (frame(y, x) < -1 || frame(y, x) > 1)) {
          throw Error(ErrorCode::NotPolarityMode,
                      "polarity volume holds out-of-range values");
        }
      }
    }
    volume.frames.push_back(std::move(frame));
  }
  return volume;
}

void write_matrix_csv(const PixelMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  out.precision(17);
  for (Eigen::Index y = 0; y < map.rows(); ++y) {
    for (Eigen::Index x = 0; x < map.cols(); ++x) {
      if (x) out << ',';
      out << map(y, x);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace evtwin::io
