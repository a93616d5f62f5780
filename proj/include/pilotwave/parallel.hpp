#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pilotwave {

/// Worker count used when callers pass 0.
inline unsigned& default_workers() {
  static unsigned n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Evaluates fn(i) for i in [0, n) on a pool of threads. Results come back in
/// index order whatever the pool size. The first exception (lowest index) is
/// rethrown after all workers finish.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn, unsigned workers = 0)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(n);
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  std::size_t err_index = n;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

/// Runs fn(i) for i in [0, n) in parallel; same error handling as parallel_map.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned workers = 0) {
  parallel_map(
      n,
      [&](std::size_t i) {
        fn(i);
        return char{0};
      },
      workers);
}

}  // namespace pilotwave
