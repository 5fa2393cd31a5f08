#pragma once

#include <cstddef>
#include <functional>

namespace alcnet {

/// Worker cap from ALCNET_THREADS, else the hardware concurrency (at least 1).
int worker_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = worker_threads()).
/// Items are split into contiguous chunks; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int threads = 0);

}  // namespace alcnet
