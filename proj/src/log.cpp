#include "cpl/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace cpl::log {

namespace {

Level g_level = Level::warn;
std::once_flag g_init;
std::mutex g_mutex;

Level parse_level(const char* s) {
  if (!s) return Level::warn;
  if (std::strcmp(s, "debug") == 0) return Level::debug;
  if (std::strcmp(s, "info") == 0) return Level::info;
  if (std::strcmp(s, "warn") == 0) return Level::warn;
  if (std::strcmp(s, "error") == 0) return Level::error;
  if (std::strcmp(s, "off") == 0) return Level::off;
  return Level::warn;
}

const char* tag(Level lv) {
  switch (lv) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    default: return "?";
  }
}

}  // namespace

Level level() {
  std::call_once(g_init, [] { g_level = parse_level(std::getenv("CPL_LOG")); });
  return g_level;
}

void set_level(Level lv) {
  level();  // consume the env var first so it cannot override later
  g_level = lv;
}

void write(Level lv, const std::string& msg) {
  if (lv < level()) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[cpl %s] %s\n", tag(lv), msg.c_str());
}

}  // namespace cpl::log
