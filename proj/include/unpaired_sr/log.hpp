#pragma once

#include <sstream>
#include <string>

namespace unpaired_sr::log {

enum class Level { debug, info, warn, error };

void write(Level level, const std::string& message);

/// Applies UNPAIRED_SR_LOG (quiet | info | debug); unknown values fall back to info.
void configure_from_env();

template <typename... Args>
std::string concat(const Args&... args) {
    std::ostringstream out;
    (out << ... << args);
    return out.str();
}

template <typename... Args>
void debug(const Args&... args) { write(Level::debug, concat(args...)); }
template <typename... Args>
void info(const Args&... args) { write(Level::info, concat(args...)); }
template <typename... Args>
void warn(const Args&... args) { write(Level::warn, concat(args...)); }
template <typename... Args>
void error(const Args&... args) { write(Level::error, concat(args...)); }

}  // namespace unpaired_sr::log
