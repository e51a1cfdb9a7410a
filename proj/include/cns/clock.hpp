#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace cns {

/// Nanoseconds since the Unix epoch, on the host realtime clock. All
/// published-at stamps and one-way latency measurements use this single
/// clock (the benchmarks are single-machine by design).
inline std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline std::string ns_to_string(std::int64_t ns) { return std::to_string(ns); }

} // namespace cns
