#pragma once

#include <cstddef>
#include <functional>

namespace bpann {

/// Worker count used when a caller passes 0: $BPANN_THREADS if set, else the
/// hardware concurrency.
std::size_t default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Iterations must touch disjoint state. With one worker, or with n below
/// `grain`, runs inline in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = 0, std::size_t grain = 1);

}  // namespace bpann
