#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dqsg {

// Work is always split into fixed-size chunks; each chunk draws from its own
// derived stream, so output never depends on how many workers ran it.
inline constexpr std::size_t kChunkSize = 4096;

std::size_t worker_count();
void set_worker_count(std::size_t n);  // 0 = hardware concurrency

namespace detail {
// Set on pool threads; nested parallel calls then run inline.
inline thread_local bool in_parallel_region = false;
}  // namespace detail

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kChunkSize) {
  return (n + chunk - 1) / chunk;
}

// Calls fn(task_index) for task_index in [0, n_tasks) on up to worker_count()
// threads. The first exception thrown by any task is rethrown.
template <typename Fn>
void parallel_tasks(std::size_t n_tasks, Fn&& fn) {
  const std::size_t workers =
      detail::in_parallel_region ? 1 : std::min(worker_count(), n_tasks);
  if (workers <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    const bool outer = detail::in_parallel_region;
    detail::in_parallel_region = true;
    struct Restore {
      bool value;
      ~Restore() { detail::in_parallel_region = value; }
    } restore{outer};
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= n_tasks) return;
      try {
        fn(t);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_tasks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// fn(chunk_index, begin, end) over [0, n) in kChunkSize pieces.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn, std::size_t chunk = kChunkSize) {
  parallel_tasks(chunk_count(n, chunk), [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    fn(c, begin, std::min(n, begin + chunk));
  });
}

}  // namespace dqsg
