#ifndef SEQKRIG_PARALLEL_HPP
#define SEQKRIG_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace seqkrig {

/// Resolves a --jobs style request: 0 means "use the hardware", anything
/// else is clamped to at least 1.
inline int effective_jobs(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Static block partition of [begin, end) over at most `jobs` threads.
/// The body must write only to slots owned by its index, so the result is
/// the same for every thread count.
inline void parallel_for(int begin, int end, int jobs, const std::function<void(int)>& body) {
  const int count = end - begin;
  if (count <= 0) return;
  jobs = std::min(effective_jobs(jobs), count);
  if (jobs <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const int chunk = (count + jobs - 1) / jobs;
  for (int w = 0; w < jobs; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([&body, &first_error, &error_mutex, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace seqkrig

#endif
