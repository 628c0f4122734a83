#include "evtwin/repr/point_cloud.hpp"

#include <fstream>

namespace evtwin::repr {

void export_point_cloud(const EventStream& stream, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  out << "t,x,y,p,color\n";
  for (const EventRecord& r : stream.records) {
    out << r.t << ',' << r.x << ',' << r.y << ',' << int(r.p) << ','
        << (r.p > 0 ? "#00ff00" : "#ff0000") << '\n';
  }
  if (!out) {
    throw Error(ErrorCode::IoError, "write failed for " + path);
  }
}

}  // namespace evtwin::repr
