#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chainscat {

/// Run fn(task) for task in [0, n_tasks) on up to `workers` threads.
///
/// Tasks are claimed dynamically, so callers must make each task's result a
/// function of its index only and merge results in index order afterwards.
/// The first exception thrown by any task is rethrown on the caller's thread.
template <class Fn>
void parallel_tasks(std::size_t n_tasks, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n_tasks, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n_tasks;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Fixed-size chunking of `total` items; chunk boundaries never depend on the
/// worker count.
struct ChunkPlan {
  std::size_t total = 0;
  std::size_t chunk = 1;

  std::size_t count() const { return chunk == 0 ? 0 : (total + chunk - 1) / chunk; }
  std::size_t begin(std::size_t i) const { return i * chunk; }
  std::size_t end(std::size_t i) const { return std::min(total, (i + 1) * chunk); }
};

}  // namespace chainscat
