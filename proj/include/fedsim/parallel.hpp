#pragma once

#include <cstddef>
#include <functional>

namespace fedsim {

// Worker cap from FEDSIM_THREADS, falling back to hardware concurrency.
size_t worker_cap();

// Runs fn(0..n-1), at most max_threads at a time (0 = worker_cap()). Results
// must be written to per-index slots by the caller; the first exception (by
// index) is rethrown after all workers join.
void parallel_for(size_t n, size_t max_threads, const std::function<void(size_t)>& fn);

}  // namespace fedsim
