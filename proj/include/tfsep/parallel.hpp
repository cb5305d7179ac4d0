#pragma once

#include <functional>

namespace tfsep {

// Global worker-count knob (0 = hardware concurrency).  Every parallel loop
// in the library assigns each index to exactly one worker and indices write
// disjoint outputs, so results are identical for any thread count.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [begin, end); first exception is rethrown on the
// calling thread.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace tfsep
