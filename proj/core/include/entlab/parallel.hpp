#pragma once

#include <cstddef>
#include <functional>

namespace entlab {

/// Runs fn(0) .. fn(n-1) on up to `threads` workers (0 = hardware
/// concurrency). Work items must only write to their own outputs.
/// The first exception thrown by any item is rethrown after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace entlab
