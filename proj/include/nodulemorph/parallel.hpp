#pragma once

#include <cstddef>
#include <functional>

namespace nodulemorph {

/// Worker cap from NODULEMORPH_THREADS (unset or invalid: hardware
/// concurrency, at least 1).
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once; the first exception thrown by any body is
/// rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace nodulemorph
