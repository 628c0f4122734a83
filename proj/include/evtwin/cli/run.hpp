#pragma once

namespace evtwin::cli {

/// Command-line entry point. Exit codes: 0 success, 1 usage error,
/// 2 data or validation error.
int run(int argc, const char* const* argv);

}  // namespace evtwin::cli
