#pragma once

#include <cstddef>
#include <functional>

namespace mwlab {

// Worker count: MWLAB_THREADS if set (>= 1), else the hardware concurrency.
unsigned thread_count();

// Calls body(i) for i in [0, count) across thread_count() workers. Results
// must be written to per-index slots so reductions stay deterministic.
// The first exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace mwlab
