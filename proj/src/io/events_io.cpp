#include "evtwin/io/events_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "evtwin/core/convert.hpp"

namespace evtwin::io {

namespace {

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

long long parse_int(const std::string& field, std::size_t line) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(field, &pos);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad integer '" + field +
                    "'");
  }
  if (pos != field.size()) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad integer '" + field +
                    "'");
  }
  return v;
}

}  // namespace

void write_events_csv(const EventStream& stream, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  out << "t,x,y,p\n";
  for (const EventRecord& r : stream.records) {
    out << r.t << ',' << r.x << ',' << r.y << ',' << int(r.p) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

EventStream read_events_csv(const std::string& path, int width, int height,
                            Timestamp dt) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for reading");
  }
  EventStream stream;
  stream.width = width;
  stream.height = height;
  stream.dt = dt;

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::ParseError, "missing header line");
  }
  ++line_no;
  if (line.rfind("t,x,y,p", 0) != 0) {
    throw Error(ErrorCode::ParseError, "header line is not t,x,y,p");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<long long> values;
    while (std::getline(row, field, ',') && values.size() < 4) {
      values.push_back(parse_int(field, line_no));
    }
    if (values.size() < 4) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": expected 4 columns");
    }
    stream.records.push_back(EventRecord{
        values[0], static_cast<std::uint16_t>(values[1]),
        static_cast<std::uint16_t>(values[2]),
        static_cast<std::int8_t>(values[3])});
    const EventRecord& r = stream.records.back();
    if (values[3] != 1 && values[3] != -1) {
      throw Error(ErrorCode::BadPolarity,
                  "line " + std::to_string(line_no) + ": polarity " +
                      std::to_string(values[3]));
    }
    if (values[1] < 0 || values[1] >= width || values[2] < 0 ||
        values[2] >= height) {
      throw Error(ErrorCode::OutOfBounds,
                  "line " + std::to_string(line_no) + ": pixel (" +
                      std::to_string(values[1]) + "," +
                      std::to_string(values[2]) + ") outside sensor");
    }
    if (r.t < 0) {
      throw Error(ErrorCode::BadTimestamp,
                  "line " + std::to_string(line_no) + ": negative timestamp");
    }
  }
  return sort_and_validate(stream);
}

void write_events_bin(const EventStream& stream, const std::string& path) {
  if (stream.width > 0xffff || stream.height > 0xffff) {
    throw Error(ErrorCode::InvariantViolation,
                "sensor dimensions exceed the 16-bit file fields");
  }
  std::string buf;
  buf.reserve(kEventHeaderSize + kEventRecordSize * stream.records.size());
  buf.append(EventFileHeader::kMagic, 4);
  put_le<std::uint16_t>(buf, EventFileHeader::kVersion);
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(stream.width));
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(stream.height));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(stream.dt));
  put_le<std::uint64_t>(buf, stream.records.size());
  for (const EventRecord& r : stream.records) {
    put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(r.t));
    put_le<std::uint16_t>(buf, r.x);
    put_le<std::uint16_t>(buf, r.y);
    buf.push_back(char(r.p));
    buf.append(3, '\0');
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

EventStream read_events_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for reading");
  }
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < kEventHeaderSize) {
    throw Error(ErrorCode::TruncatedFile, "file shorter than the header");
  }
  if (std::memcmp(buf.data(), EventFileHeader::kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "bad magic, expected EVT1");
  }
  EventFileHeader header;
  header.version = get_le<std::uint16_t>(buf.data() + 4);
  header.width = get_le<std::uint16_t>(buf.data() + 6);
  header.height = get_le<std::uint16_t>(buf.data() + 8);
  header.dt = get_le<std::uint32_t>(buf.data() + 10);
  header.count = get_le<std::uint64_t>(buf.data() + 14);
  if (header.version != EventFileHeader::kVersion) {
    throw Error(ErrorCode::ParseError,
                "unsupported version " + std::to_string(header.version));
  }
  if (buf.size() != kEventHeaderSize + kEventRecordSize * header.count) {
    throw Error(ErrorCode::TruncatedFile,
                "file size does not match the record count");
  }
  EventStream stream;
  stream.width = header.width;
  stream.height = header.height;
  stream.dt = header.dt;
  stream.records.reserve(header.count);
  for (std::uint64_t i = 0; i < header.count; ++i) {
    const char* rec = buf.data() + kEventHeaderSize + kEventRecordSize * i;
    EventRecord r;
    r.t = static_cast<Timestamp>(get_le<std::uint64_t>(rec));
    r.x = get_le<std::uint16_t>(rec + 8);
    r.y = get_le<std::uint16_t>(rec + 10);
    r.p = static_cast<std::int8_t>(rec[12]);
    if (r.p != 1 && r.p != -1) {
      throw Error(ErrorCode::BadPolarity,
                  "record " + std::to_string(i) + ": bad polarity");
    }
    stream.records.push_back(r);
  }
  return sort_and_validate(stream);
}

std::string guess_events_format(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && path.substr(dot) == ".csv") return "csv";
  return "bin";
}

}  // namespace evtwin::io
