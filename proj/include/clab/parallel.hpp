#ifndef CLAB_PARALLEL_HPP
#define CLAB_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace clab {

inline int& thread_count_ref() {
  static int n = 0;  // 0 = auto
  return n;
}

inline void set_thread_count(int n) { thread_count_ref() = n; }

inline int effective_threads() {
  int n = thread_count_ref();
  if (n > 0) return n;
  if (const char* env = std::getenv("LAB_THREADS")) {
    int e = std::atoi(env);
    if (e > 0) return e;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Work queue over indices [0, n); results must be written into per-index
/// slots by the body so that the merged output is schedule-independent.
template <typename Fn>
void parallel_for(long n, Fn&& body) {
  int workers = effective_threads();
  if (workers <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  auto work = [&] {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!failed.exchange(true)) err = std::current_exception();
        return;
      }
    }
  };
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(err);
}

}  // namespace clab

#endif
