#pragma once

#include <cstddef>
#include <functional>

namespace macbound {

/// Caps the number of worker threads used by table builds and simulations.
/// Zero restores the default (hardware concurrency).
void set_worker_limit(unsigned limit);
unsigned worker_count();

/// Calls fn(i) for i in [0, count), spread over worker_count() threads. The
/// assignment of indices to threads is fixed, so results written per index
/// do not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace macbound
