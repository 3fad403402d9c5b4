#pragma once

#include <cstdint>

namespace specmap::memtrack {

struct Stats {
  std::uint64_t current_bytes = 0;     // live heap bytes right now
  std::uint64_t window_peak_bytes = 0; // max of (current - baseline) since reset
  std::uint64_t max_single_bytes = 0;  // largest single allocation since reset
  std::uint64_t alloc_count = 0;       // allocations since reset
};

// True once the malloc hooks have intercepted at least one allocation.
// Binaries that never pull this translation unit report inactive and all
// counters stay zero.
bool active();

// Starts a measurement window at the current live size.
void reset_window();

Stats stats();

}  // namespace specmap::memtrack
