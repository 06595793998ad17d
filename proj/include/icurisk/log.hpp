#pragma once

#include <string_view>

namespace icurisk {

enum class LogLevel { debug = 0, info = 1, warning = 2, error = 3, off = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();
void log(LogLevel level, std::string_view msg);

inline void log_info(std::string_view msg) { log(LogLevel::info, msg); }
inline void log_warning(std::string_view msg) { log(LogLevel::warning, msg); }

}  // namespace icurisk
