#include "urb/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace urb::log {

namespace {

Level g_threshold = [] {
  const char* env = std::getenv("URB_LOG");
  if (env == nullptr) return Level::warn;
  std::string v(env);
  if (v == "error") return Level::error;
  if (v == "info") return Level::info;
  if (v == "debug") return Level::debug;
  return Level::warn;
}();

std::mutex g_mutex;

constexpr const char* tag(Level lvl) {
  switch (lvl) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
  }
  return "?";
}

}  // namespace

Level threshold() { return g_threshold; }
void set_threshold(Level lvl) { g_threshold = lvl; }
bool enabled(Level lvl) { return static_cast<int>(lvl) <= static_cast<int>(g_threshold); }

void write(Level lvl, std::string_view msg) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[" << tag(lvl) << "] " << msg << "\n";
}

}  // namespace urb::log
