#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace fnls {

// Fan out fn(i) for i in [0, n) over a worker pool.  Workers pull indices
// from a shared counter; callers write results into per-index slots, so the
// outcome is independent of scheduling order.  The first exception is
// rethrown after all workers join.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 0) threads = int(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (threads == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int k = std::min(threads, n);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (failed) std::rethrow_exception(error);
}

}  // namespace fnls
