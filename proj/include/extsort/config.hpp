#pragma once

#include <cstddef>

namespace extsort {

// Memory accounting charges each buffered record its serialized size plus the
// constants below. Allocator internals are deliberately not modeled; these
// constants make the budget reproducible across platforms.

// Bookkeeping allowance per buffered record (container headers, slack).
inline constexpr std::size_t kRecordBookkeepingBytes = 48;

// One slot in the pointer array that the in-memory sort permutes.
inline constexpr std::size_t kRunRefBytes = 8;

// In-memory sort cutoffs (introsort-style hybrid).
// Ranges at or below this length are finished with insertion sort.
inline constexpr std::size_t kInsertionSortThreshold = 16;
// Recursion depth limit factor: heapsort fallback kicks in below
// kQuicksortDepthFactor * floor(log2 n).
inline constexpr int kQuicksortDepthFactor = 2;

// Default knobs mirrored by SortConfig / IoConfig.
inline constexpr std::size_t kDefaultTapeCount = 8;
inline constexpr std::size_t kDefaultBlockSizeRecords = 4096;
inline constexpr std::size_t kDefaultIoBufferBytes = 256 * 1024;
inline constexpr std::size_t kMinIoBufferBytes = 4096;

} // namespace extsort
