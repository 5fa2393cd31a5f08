#include "alcnet/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace alcnet::log {

namespace {
std::atomic<Level> current{Level::Warn};
std::mutex sink_mutex;

const char* tag(Level l) {
  switch (l) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    case Level::Off: break;
  }
  return "";
}
}  // namespace

void set_level(Level l) { current.store(l); }
Level level() { return current.load(); }

void write(Level l, std::string_view message) {
  if (l < current.load() || l == Level::Off) return;
  std::lock_guard lock(sink_mutex);
  std::clog << "[alcnet " << tag(l) << "] " << message << '\n';
}

}  // namespace alcnet::log
