#pragma once

#include <iosfwd>

namespace privgate {

// Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print a
// single JSON line {"error", "message"} on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace privgate
