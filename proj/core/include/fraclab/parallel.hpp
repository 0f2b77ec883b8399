#pragma once

#include <cstddef>
#include <functional>

namespace fraclab {

/// Worker count used when a call passes threads = 0. Defaults to 1.
void set_default_threads(int threads);
int default_threads();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0: default).
/// Each index is handled exactly once; results must be written to per-index
/// slots so the outcome does not depend on scheduling. The first exception
/// thrown by any body is rethrown after all workers have joined.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace fraclab
