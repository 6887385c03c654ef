#pragma once

#include <cstddef>
#include <functional>

namespace repscore {

// Worker cap: REPSCORE_THREADS when set to a positive integer, else the
// hardware concurrency (at least 1).
unsigned worker_count();

// Runs body(i) for i in [0, n) over contiguous blocks. body must only touch
// state owned by index i; results therefore do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace repscore
