#ifndef VMA_LOG_HPP_
#define VMA_LOG_HPP_

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>

namespace vma::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Verbosity comes from the VMA_LOG environment variable
/// (error|warn|info|debug); warnings are shown by default.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("VMA_LOG");
    if (env == nullptr) return Level::Warn;
    std::string_view v(env);
    if (v == "error") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

inline void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  static std::mutex mu;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "[vma " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

template <typename... Args>
void emit(Level level, const Args&... args) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  std::ostringstream os;
  (os << ... << args);
  write(level, os.str());
}

template <typename... Args> void error(const Args&... a) { emit(Level::Error, a...); }
template <typename... Args> void warn(const Args&... a) { emit(Level::Warn, a...); }
template <typename... Args> void info(const Args&... a) { emit(Level::Info, a...); }
template <typename... Args> void debug(const Args&... a) { emit(Level::Debug, a...); }

}  // namespace vma::log

#endif  // VMA_LOG_HPP_
