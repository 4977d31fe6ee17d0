#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace ggrow {

// Runs fn(i) for i in [0, n) on up to `jobs` threads with a static interleaved
// schedule. Callers keep determinism by writing results into index-addressed
// slots and reducing serially afterwards. The first worker exception (by
// worker index) is rethrown after the join.
template <typename Fn>
void parallel_for(int jobs, long n, Fn&& fn) {
  const int workers =
      static_cast<int>(std::max(1L, std::min<long>(jobs <= 1 ? 1 : jobs, n)));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (long i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ggrow
