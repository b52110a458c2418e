#ifndef DIRACLAB_PARALLEL_HPP
#define DIRACLAB_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace diraclab {

/// Worker cap used by the ensembles; 0 means hardware concurrency.
inline std::atomic<unsigned>& default_jobs() {
  static std::atomic<unsigned> jobs{1};
  return jobs;
}

inline unsigned resolve_jobs(unsigned jobs) {
  if (jobs == 0) jobs = default_jobs().load();
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  return jobs;
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be written to
/// per-index slots so the outcome does not depend on scheduling. The first exception is rethrown.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned jobs = 0) {
  jobs = std::min<std::size_t>(resolve_jobs(jobs), std::max<std::size_t>(count, 1));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (err) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace diraclab

#endif  // DIRACLAB_PARALLEL_HPP
