#pragma once

#include <mutex>

namespace anovakrr::detail {

// FFTW's planner is not thread-safe; plan execution is. Every call that
// creates or destroys a plan takes this lock.
std::mutex& fftw_planner_mutex();

}  // namespace anovakrr::detail
