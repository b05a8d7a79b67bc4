#include "privgate/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>

namespace privgate {

spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_logger_mt("privgate");
    l->set_pattern("[%Y-%m-%dT%H:%M:%S.%e] [%l] %v");
    if (const char* level = std::getenv("PRIVGATE_LOG_LEVEL")) {
      l->set_level(spdlog::level::from_str(level));
    } else {
      l->set_level(spdlog::level::warn);
    }
    return l;
  }();
  return *logger;
}

}  // namespace privgate
