#pragma once

#include <cstddef>
#include <functional>

namespace rdc {

/// Worker count from RDC_WORKERS, falling back to the hardware concurrency.
int worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index is
/// processed exactly once, so results written by index are independent of the
/// schedule. The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rdc
