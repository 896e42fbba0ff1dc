#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace floodlab {

// Verbosity from FLOODLAB_LOG: quiet | info (default) | debug.
inline int log_level() {
    static const int level = [] {
        const char* env = std::getenv("FLOODLAB_LOG");
        if (!env) return 1;
        if (std::strcmp(env, "quiet") == 0) return 0;
        if (std::strcmp(env, "debug") == 0) return 2;
        return 1;
    }();
    return level;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= 1) std::fprintf(stderr, "[floodlab] %s\n", msg.c_str());
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::fprintf(stderr, "[floodlab:debug] %s\n", msg.c_str());
}

}  // namespace floodlab
