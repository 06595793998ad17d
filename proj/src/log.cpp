#include "icurisk/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace icurisk {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warning};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log(LogLevel level, std::string_view msg) {
  if (level < g_level.load()) return;
  static constexpr const char* names[] = {"debug", "info", "warning", "error"};
  std::lock_guard lock(g_mutex);
  std::clog << "[icurisk " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

}  // namespace icurisk
