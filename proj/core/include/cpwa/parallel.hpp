#ifndef CPWA_PARALLEL_HPP
#define CPWA_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace cpwa {

// Runs fn(i) for i in [0, count). With jobs > 1 the index range is split into
// contiguous chunks, one thread per chunk; fn must only write to slot i of
// pre-sized outputs so results are independent of the schedule.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  const int chunk = (count + jobs - 1) / jobs;
  for (int w = 0; w < jobs; ++w) {
    const int begin = w * chunk;
    const int end = std::min(count, begin + chunk);
    workers.emplace_back([&, w, begin, end] {
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace cpwa

#endif  // CPWA_PARALLEL_HPP
