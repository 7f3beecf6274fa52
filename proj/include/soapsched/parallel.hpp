#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace soapsched {

/// Worker count: SOAP_SCHED_THREADS if set and positive, otherwise the
/// hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("SOAP_SCHED_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates fn(0..n-1) on a worker pool; results keep index order. The first
/// exception thrown by any task is rethrown after all workers join.
template <class R>
std::vector<R> parallel_map(std::size_t n, const std::function<R(std::size_t)>& fn) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace soapsched
