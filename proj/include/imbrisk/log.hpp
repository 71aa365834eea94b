#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace imbrisk {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// Verbosity comes from IMBRISK_LOG (quiet|info|debug), default info.
inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("IMBRISK_LOG");
        if (env == nullptr) return LogLevel::Info;
        const std::string_view v{env};
        if (v == "quiet") return LogLevel::Quiet;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[imbrisk] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::cerr << "[imbrisk:debug] " << msg << "\n";
}

inline void log_warn(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[imbrisk:warn] " << msg << "\n";
}

}  // namespace imbrisk
