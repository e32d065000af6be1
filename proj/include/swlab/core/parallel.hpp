#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace swlab {

namespace detail {
inline std::atomic<std::size_t>& worker_override() {
  static std::atomic<std::size_t> n{0};
  return n;
}
}  // namespace detail

// Worker count: explicit override, else SWLAB_WORKERS, else hardware threads.
inline std::size_t worker_count() {
  if (const std::size_t n = detail::worker_override().load(); n > 0) return n;
  if (const char* env = std::getenv("SWLAB_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

inline void set_worker_count(std::size_t n) { detail::worker_override().store(n); }

// Runs fn(begin, end) over contiguous chunks of [0, n). Each index is
// handled by exactly one call, so writes to per-index slots are race free
// and results do not depend on the worker count.
template <class Fn>
void parallel_chunks(std::size_t n, Fn&& fn, std::size_t min_chunk = 1) {
  if (n == 0) return;
  const std::size_t workers = std::min(worker_count(), (n + min_chunk - 1) / min_chunk);
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  // Over-decompose for load balance; chunks are claimed dynamically.
  const std::size_t chunks = std::min(n, workers * 8);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    while (true) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::size_t b = n * c / chunks;
      const std::size_t e = n * (c + 1) / chunks;
      try {
        fn(b, e);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 0; w + 1 < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  parallel_chunks(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace swlab
