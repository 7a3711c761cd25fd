#include "bpann/parallel.hpp"

#include <tbb/blocked_range.h>
#include <tbb/info.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

namespace bpann {

std::size_t default_threads() {
  if (const char* env = std::getenv("BPANN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads, std::size_t grain) {
  if (threads == 0) threads = default_threads();
  // TBB never runs more workers than it has cores; asking for more only warns.
  threads = std::min<std::size_t>(threads, static_cast<std::size_t>(tbb::info::default_concurrency()));
  if (threads <= 1 || n < 2 || n < grain) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  tbb::task_arena arena(static_cast<int>(threads));
  arena.execute([&] {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, grain),
                      [&](const tbb::blocked_range<std::size_t>& r) {
                        for (std::size_t i = r.begin(); i != r.end(); ++i) fn(i);
                      });
  });
}

}  // namespace bpann
