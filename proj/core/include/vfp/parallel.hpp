#pragma once

#include <cstddef>
#include <functional>

namespace vfp {

/// Worker count: VFP_THREADS when set to a positive integer, else the
/// hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) across worker_count() threads. Bodies must
/// write only to slot i of their output so results do not depend on the
/// number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace vfp
