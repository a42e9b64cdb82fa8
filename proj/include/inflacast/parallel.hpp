#pragma once

#include <cstddef>
#include <functional>

namespace inflacast {

/// Worker count: INFLACAST_THREADS when set to a positive integer, else hardware concurrency.
std::size_t worker_count();

/// Run body(i) for i in [0, n). Each index is processed exactly once; callers write
/// results into per-index slots and reduce afterwards in index order, which keeps
/// outputs independent of scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace inflacast
