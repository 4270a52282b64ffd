#include "anovakrr/parallel.hpp"

namespace anovakrr {

namespace {

int default_threads() {
  const auto hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int> g_max_threads{default_threads()};

}  // namespace

void set_max_threads(int threads) {
  g_max_threads = threads <= 0 ? default_threads() : threads;
}

int max_threads() { return g_max_threads.load(); }

}  // namespace anovakrr
