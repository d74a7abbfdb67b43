#pragma once

#include <cstddef>
#include <functional>

namespace p2lr {

/// Worker count used by data-parallel loops. Reads `P2LR_THREADS` on first
/// use; falls back to hardware concurrency. Never less than 1.
std::size_t worker_count();

/// Overrides the worker count for the current process (0 restores the
/// environment-derived default).
void set_worker_count(std::size_t workers);

/// Runs `body(i)` for i in [0, n) across the configured workers. Bodies must
/// only write to per-index slots; every reduction happens afterwards on the
/// calling thread in ascending index order, which keeps results independent
/// of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace p2lr
