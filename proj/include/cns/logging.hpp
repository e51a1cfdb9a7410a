#pragma once

#include <atomic>
#include <cstdio>
#include <functional>
#include <mutex>
#include <string>
#include <utility>

namespace cns::logging {

enum class Level { Debug, Info, Warn };

using Handler = std::function<void(Level, const std::string&)>;

namespace detail {

struct State {
    std::mutex mutex;
    Handler handler; // empty -> stderr
    std::atomic<uint64_t> warn_count{0};
};

inline State& state() {
    static State s;
    return s;
}

inline const char* level_tag(Level level) {
    switch (level) {
    case Level::Debug: return "DEBUG";
    case Level::Info: return "INFO";
    case Level::Warn: return "WARN";
    }
    return "?";
}

} // namespace detail

/// Replace the process-wide log sink. Pass an empty handler to restore stderr.
inline void set_handler(Handler handler) {
    auto& s = detail::state();
    std::lock_guard lock(s.mutex);
    s.handler = std::move(handler);
}

inline void emit(Level level, const std::string& message) {
    auto& s = detail::state();
    if (level == Level::Warn) {
        s.warn_count.fetch_add(1, std::memory_order_relaxed);
    }
    Handler h;
    {
        std::lock_guard lock(s.mutex);
        h = s.handler;
    }
    if (h) {
        h(level, message);
    } else {
        std::fprintf(stderr, "[cns %s] %s\n", detail::level_tag(level), message.c_str());
    }
}

inline void warn(const std::string& message) { emit(Level::Warn, message); }
inline void info(const std::string& message) { emit(Level::Info, message); }

/// Total warnings emitted since process start. Rejection tests use this to
/// check the one-warning-per-rejection contract.
inline uint64_t warn_count() {
    return detail::state().warn_count.load(std::memory_order_relaxed);
}

} // namespace cns::logging
