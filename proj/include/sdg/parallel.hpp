#pragma once

#include <cstddef>
#include <functional>

namespace sdg {

/// Execution knobs shared by every Monte Carlo routine.
struct ExecutionPolicy {
  /// Worker threads; 0 picks the hardware concurrency.
  int workers = 1;
  /// Reduce in index order so results do not depend on `workers`.
  bool reproducible = true;
};

int resolve_workers(int workers);

/// Calls body(i) for every i in [0, n) on up to `workers` threads. If any
/// call throws, the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

/// Calls body(begin, end, worker) on contiguous chunks, one per worker.
void parallel_chunks(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t, int)>& body);

}  // namespace sdg
