#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>

namespace fcxl {

/// Calls fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Callers write results by index, so output never depends on
/// scheduling. The first exception thrown by fn is rethrown after all
/// workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Stable 64-bit FNV-1a, for deriving per-sample seeds from string ids.
std::uint64_t fnv1a(std::string_view s);

}  // namespace fcxl
