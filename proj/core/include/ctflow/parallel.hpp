#pragma once

#include <cstddef>
#include <functional>

namespace ctflow {

/// Runs fn(i) for every i in [0, n) on up to `jobs` threads (serial when
/// jobs <= 1). fn must only touch per-index state; the first exception
/// thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace ctflow
