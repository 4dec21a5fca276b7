#ifndef SMURF_SRC_PARALLEL_UTIL_HPP
#define SMURF_SRC_PARALLEL_UTIL_HPP

#include <exception>
#include <thread>
#include <vector>

namespace smurf::detail {

// Runs fn(i) for i = 0..n-1, split contiguously across `jobs` threads.
// Work items must be independent and write to disjoint state; exceptions
// are replayed on the calling thread after the join.  jobs <= 1 stays on
// the calling thread, which is also the deterministic reference order.
template <typename Fn>
void run_indexed(int n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = jobs < n ? jobs : n;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    const int lo = static_cast<int>(static_cast<long>(n) * t / workers);
    const int hi = static_cast<int>(static_cast<long>(n) * (t + 1) / workers);
    pool.emplace_back([&fn, &errors, lo, hi, t] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace smurf::detail

#endif
