#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fmargin::detail {

// Splits [0, count) into contiguous chunks, one per worker. fn(begin, end)
// must only write to indices it owns.
template <typename Fn>
void parallel_for(long count, unsigned threads, Fn&& fn) {
  const long workers = std::clamp<long>(threads, 1, std::max<long>(1, count));
  if (workers == 1) {
    fn(0L, count);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const long chunk = (count + workers - 1) / workers;
  for (long w = 0; w < workers; ++w) {
    const long begin = w * chunk;
    const long end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fmargin::detail
