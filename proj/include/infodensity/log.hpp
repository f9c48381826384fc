#pragma once

#include <string_view>

#include "json.hpp"
#include <spdlog/common.h>

// Structured logging: every line on stderr is one JSON object carrying at
// least "ts", "level" and "event".
namespace infodensity::log {

using Fields = nlohmann::ordered_json;

/// Accepts spdlog level names ("trace", "debug", "info", "warn", "error",
/// "critical", "off"). Throws std::invalid_argument otherwise.
void set_level(std::string_view level);

void emit(spdlog::level::level_enum level, std::string_view event, const Fields& fields = {});

inline void debug(std::string_view event, const Fields& fields = {}) {
  emit(spdlog::level::debug, event, fields);
}
inline void info(std::string_view event, const Fields& fields = {}) {
  emit(spdlog::level::info, event, fields);
}
inline void warn(std::string_view event, const Fields& fields = {}) {
  emit(spdlog::level::warn, event, fields);
}
inline void error(std::string_view event, const Fields& fields = {}) {
  emit(spdlog::level::err, event, fields);
}

}  // namespace infodensity::log
