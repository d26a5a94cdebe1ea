#pragma once

#include <cstddef>
#include <functional>

namespace climrisk {

// Calls body(i) for i in [0, n) on up to `threads` worker threads. Work is
// handed out by an atomic counter; callers write results by index so the
// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// 0 or negative means "use the hardware concurrency".
int resolve_threads(int requested) noexcept;

}  // namespace climrisk
