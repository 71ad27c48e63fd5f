#pragma once

#include <iostream>
#include <sstream>
#include <string>

namespace tempcycle::log {

enum class Level { Debug = 0, Info, Warn, Error };

inline Level& threshold() {
  static Level level = Level::Info;
  return level;
}

inline Level parse_level(const std::string& s) {
  if (s == "debug") return Level::Debug;
  if (s == "info") return Level::Info;
  if (s == "warn") return Level::Warn;
  if (s == "error") return Level::Error;
  throw std::invalid_argument("unknown log level '" + s + "'");
}

// Lines go to stderr as "tempcycle: <level>: <message>".
template <typename... Args>
void write(Level level, const Args&... args) {
  if (level < threshold()) return;
  static constexpr const char* names[] = {"debug", "info", "warning", "error"};
  std::ostringstream os;
  os << "tempcycle: " << names[static_cast<int>(level)] << ": ";
  (os << ... << args);
  os << '\n';
  std::cerr << os.str();
}

template <typename... Args>
void debug(const Args&... args) { write(Level::Debug, args...); }
template <typename... Args>
void info(const Args&... args) { write(Level::Info, args...); }
template <typename... Args>
void warn(const Args&... args) { write(Level::Warn, args...); }
template <typename... Args>
void error(const Args&... args) { write(Level::Error, args...); }

}  // namespace tempcycle::log
