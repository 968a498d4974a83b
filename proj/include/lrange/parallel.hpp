#pragma once

#include <cstddef>
#include <functional>

namespace lrange {

/// Number of workers used by parallel_for (hardware concurrency, at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, count) across workers. Each index runs exactly
/// once; callers write results into per-index slots so output does not
/// depend on scheduling. The first exception thrown by fn is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace lrange
