#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace anovakrr {

// Process-wide cap on worker threads. 1 means everything runs inline on the
// calling thread.
void set_max_threads(int threads);
int max_threads();

namespace detail {
// Set on pool workers so nested parallel_for calls run inline instead of
// multiplying the thread count.
inline thread_local bool in_worker = false;
}  // namespace detail

// Calls body(i) for i in [0, count). Iterations are handed out dynamically;
// callers must write results into per-index slots so the outcome does not
// depend on scheduling. The first exception thrown by any iteration is
// rethrown on the calling thread. Calls made from inside a worker run inline.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(max_threads()));
  if (workers <= 1 || detail::in_worker) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic_flag failed = ATOMIC_FLAG_INIT;
  auto run = [&] {
    const bool outer = detail::in_worker;
    detail::in_worker = true;
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        if (!failed.test_and_set()) failure = std::current_exception();
      }
    }
    detail::in_worker = outer;
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace anovakrr
