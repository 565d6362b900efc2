#pragma once

#include <cstddef>
#include <functional>

namespace nesua {

/// Worker count: NESUA_THREADS when set to a positive integer, else the hardware
/// concurrency (at least 1).
std::size_t worker_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index runs exactly
/// once; callers write results into per-index slots so reductions stay ordered.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads = 0);

}  // namespace nesua
