#include "evtwin/io/config_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace evtwin::io {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::TypeMismatch,
                key + ": expected a number, got '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::TypeMismatch,
                key + ": expected an integer, got '" + value + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::TypeMismatch,
                key + ": expected an unsigned integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw Error(ErrorCode::TypeMismatch,
              key + ": expected a boolean, got '" + value + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

using Setter = std::function<void(ConfigDoc&, const std::string&,
                                  const std::string&)>;
using Getter = std::function<std::string(const ConfigDoc&)>;

struct Field {
  Setter set;
  Getter get;
};

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    auto add = [&](const std::string& key, Setter set, Getter get) {
      f[key] = {std::move(set), std::move(get)};
    };

#define EVTWIN_DBL(KEY, REF)                                        \
  add(KEY,                                                          \
      [](ConfigDoc& d, const std::string& k, const std::string& v) { \
        d.REF = parse_double(k, v);                                 \
      },                                                            \
      [](const ConfigDoc& d) { return format_double(d.REF); })
#define EVTWIN_INT(KEY, REF)                                        \
  add(KEY,                                                          \
      [](ConfigDoc& d, const std::string& k, const std::string& v) { \
        d.REF = static_cast<decltype(d.REF)>(parse_int(k, v));      \
      },                                                            \
      [](const ConfigDoc& d) { return std::to_string(d.REF); })
#define EVTWIN_BOOL(KEY, REF)                                       \
  add(KEY,                                                          \
      [](ConfigDoc& d, const std::string& k, const std::string& v) { \
        d.REF = parse_bool(k, v);                                   \
      },                                                            \
      [](const ConfigDoc& d) { return d.REF ? "true" : "false"; })

    EVTWIN_INT("width", sensor.width);
    EVTWIN_INT("height", sensor.height);
    EVTWIN_INT("dt", sensor.dt);
    EVTWIN_DBL("gain", sensor.gain);
    EVTWIN_DBL("qe", sensor.qe);
    EVTWIN_DBL("quantum_efficiency", sensor.quantum_efficiency);
    EVTWIN_DBL("theta_pos_mean", sensor.theta_pos_mean);
    EVTWIN_DBL("theta_neg_mean", sensor.theta_neg_mean);
    EVTWIN_DBL("theta_sigma", sensor.theta_sigma);
    EVTWIN_DBL("sigma_dark", sensor.sigma_dark);
    EVTWIN_DBL("leak_chance", sensor.leak_chance);
    EVTWIN_INT("refractory", sensor.refractory);
    EVTWIN_DBL("hot_pixel_fraction", sensor.hot_pixel_fraction);
    EVTWIN_DBL("well_capacity", sensor.well_capacity);
    EVTWIN_BOOL("shot_noise", sensor.shot_noise);
    add("seed",
        [](ConfigDoc& d, const std::string& k, const std::string& v) {
          d.sensor.seed = parse_uint(k, v);
        },
        [](const ConfigDoc& d) { return std::to_string(d.sensor.seed); });

    EVTWIN_INT("baf_dt", filters.baf_dt);
    EVTWIN_INT("baf_radius", filters.baf_radius);
    EVTWIN_INT("ief_t_minus", filters.ief_t_minus);
    EVTWIN_INT("ief_t_plus", filters.ief_t_plus);
    EVTWIN_BOOL("ief_polarity_agnostic", filters.ief_polarity_agnostic);
    EVTWIN_INT("ynoise_dt", filters.ynoise_dt);
    EVTWIN_INT("ynoise_radius", filters.ynoise_radius);
    EVTWIN_INT("ynoise_coarse_min", filters.ynoise_coarse_min);
    EVTWIN_INT("ynoise_hot_max", filters.ynoise_hot_max);

    EVTWIN_DBL("steepness", relax.steepness);
    EVTWIN_BOOL("use_hard_forward", relax.use_hard_forward);

#undef EVTWIN_DBL
#undef EVTWIN_INT
#undef EVTWIN_BOOL
    return f;
  }();
  return table;
}

}  // namespace

ConfigDoc read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for reading");
  }
  ConfigDoc doc;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) {
      throw Error(ErrorCode::UnknownKey, "unknown key: " + key);
    }
    it->second.set(doc, key, value);
    doc.keys_present.insert(key);
  }
  sim::validate(doc.sensor);
  filters::validate(doc.filters);
  if (!(doc.relax.steepness > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "steepness must be > 0");
  }
  return doc;
}

void write_config(const ConfigDoc& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  for (const auto& [key, field] : fields()) {
    out << key << " = " << field.get(doc) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace evtwin::io
