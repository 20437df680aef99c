#pragma once

#include <sstream>
#include <string_view>

namespace urb::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Threshold comes from the URB_LOG environment variable
// (error|warn|info|debug); defaults to warn.
Level threshold();
void set_threshold(Level lvl);
bool enabled(Level lvl);
void write(Level lvl, std::string_view msg);

template <typename... Args>
void emit(Level lvl, Args&&... args) {
  if (!enabled(lvl)) return;
  std::ostringstream os;
  (os << ... << args);
  write(lvl, os.str());
}

template <typename... Args>
void error(Args&&... args) {
  emit(Level::error, std::forward<Args>(args)...);
}
template <typename... Args>
void warn(Args&&... args) {
  emit(Level::warn, std::forward<Args>(args)...);
}
template <typename... Args>
void info(Args&&... args) {
  emit(Level::info, std::forward<Args>(args)...);
}
template <typename... Args>
void debug(Args&&... args) {
  emit(Level::debug, std::forward<Args>(args)...);
}

}  // namespace urb::log
