#pragma once

#include <cstddef>
#include <functional>

namespace sigfolio {

// Global worker count used by parallel_for. Defaults to the hardware
// concurrency; the CLI overrides it with --threads.
void set_thread_count(int n);
int thread_count();

// Runs f(i) for every i in [0, n). Iterations must be independent; results
// should be written to preallocated per-index slots. Exceptions thrown by f
// are captured and rethrown on the calling thread.
//
// Numerical determinism contract: parallelism only distributes independent
// indices, never reorders a reduction. Callers that accumulate must do so in
// index order after the loop (see e.g. monte_carlo_average), which keeps
// outputs identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace sigfolio
