#ifndef ROBUSTFILL_PARALLEL_HPP
#define ROBUSTFILL_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace robustfill {

// Number of worker threads honored by parallel_for.  Reads ROBUSTFILL_THREADS
// once; absent or invalid means hardware concurrency.
unsigned thread_budget();

// Runs fn(i) for i in [0, n).  Tasks must be independent; each writes only to
// its own output slot so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace robustfill

#endif
