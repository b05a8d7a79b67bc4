#pragma once

#include <spdlog/spdlog.h>

namespace privgate {

// Shared stderr logger; stdout stays reserved for command output.
spdlog::logger& log();

}  // namespace privgate
