#pragma once

#include <cstddef>
#include <functional>

namespace lgilab {

// Worker count: LGILAB_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
unsigned worker_count();

// Runs body(i) for i in [0, count) on up to worker_count() threads. Each
// index runs exactly once; callers write results into per-index slots so
// the combined output does not depend on scheduling. The first exception
// thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace lgilab
