#pragma once

#include <cstddef>
#include <cstdint>

namespace tnloss::alloc {

// Host-allocator instrumentation. Linking any caller of these functions pulls
// in replacement global operator new/delete that keep an atomic count of live
// requested bytes and the high-water mark. Counts are of requested sizes, not
// malloc bucket sizes, so they line up with the analytic model.

// Bytes currently allocated through the tracked operators.
std::size_t live_bytes();

// High-water mark of live_bytes since the last reset_peak().
std::size_t peak_bytes();

// Number of tracked allocations since process start.
std::uint64_t allocation_count();

// Sets the peak back to the current live count. Typical measurement:
//   base = live_bytes(); reset_peak(); <work>; delta = peak_bytes() - base;
void reset_peak();

}  // namespace tnloss::alloc
