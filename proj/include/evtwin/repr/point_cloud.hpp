#pragma once

#include <string>

#include "evtwin/core/types.hpp"

namespace evtwin::repr {

/// Writes one row per event as "t,x,y,p,color" with a polarity color code
/// (#00ff00 for +1, #ff0000 for -1) after a "t,x,y,p,color" header. The
/// first four columns parse back through the event CSV reader.
void export_point_cloud(const EventStream& stream, const std::string& path);

}  // namespace evtwin::repr
