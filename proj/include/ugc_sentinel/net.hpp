#pragma once

#include <atomic>
#include <cstdint>

namespace ugcs::net {

// Counts every outbound connection attempt made by the HTTP providers.
// Offline runs assert this stays at zero.
inline std::atomic<std::uint64_t>& attempt_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

inline void record_attempt() { attempt_counter().fetch_add(1); }
inline std::uint64_t attempts() { return attempt_counter().load(); }
inline void reset_attempts() { attempt_counter().store(0); }

}  // namespace ugcs::net
