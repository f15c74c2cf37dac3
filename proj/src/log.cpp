#include "wdn/common.hpp"

#include <cstdlib>
#include <cstring>

namespace wdn::log {

namespace {

Level parse_env() {
  const char* v = std::getenv("WDNRTR_LOG");
  if (v == nullptr) return Level::warn;
  if (std::strcmp(v, "quiet") == 0) return Level::quiet;
  if (std::strcmp(v, "warn") == 0) return Level::warn;
  if (std::strcmp(v, "info") == 0) return Level::info;
  if (std::strcmp(v, "debug") == 0) return Level::debug;
  return Level::warn;
}

}  // namespace

Level level() {
  static Level lv = parse_env();
  return lv;
}

bool enabled(Level lv) { return static_cast<int>(lv) <= static_cast<int>(level()); }

void write(Level lv, const std::string& msg) {
  if (!enabled(lv)) return;
  const char* tag = lv == Level::warn ? "warn" : lv == Level::info ? "info" : "debug";
  std::fprintf(stderr, "[wdnrtr %s] %s\n", tag, msg.c_str());
}

}  // namespace wdn::log
