#pragma once

#include <set>
#include <string>

#include "evtwin/diff/relaxed.hpp"
#include "evtwin/filters/filters.hpp"
#include "evtwin/sim/config.hpp"

namespace evtwin::io {

/// Everything a flat config document can carry. keys_present records which
/// keys the file actually set (the rest hold defaults).
struct ConfigDoc {
  sim::SensorConfig sensor;
  filters::FilterParams filters;
  diff::RelaxationConfig relax;
  std::set<std::string> keys_present;
};

/// Parses a "key = value" document ('#' starts a comment). Keys match the
/// parameter struct field names; unknown keys raise Error{UnknownKey},
/// malformed values Error{TypeMismatch}, and domain violations
/// Error{InvariantViolation}. Missing keys keep their defaults.
ConfigDoc read_config(const std::string& path);

/// Writes every key with full precision; read_config(write_config(x)) == x.
void write_config(const ConfigDoc& doc, const std::string& path);

}  // namespace evtwin::io
