#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ellfocal {

/// Runs job(i) for i in [0, count) on up to `threads` workers. Jobs write
/// their results by index, so the merged output does not depend on the
/// thread count. The first exception thrown by any job is rethrown after
/// all workers have joined.
template <class Job>
void parallel_for(int count, int threads, Job&& job) {
  if (count <= 0) return;
  const int workers = std::clamp(threads, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ellfocal
