#pragma once

#include <cstdlib>
#include <future>
#include <thread>
#include <vector>

namespace fracpq {

/// Worker cap: `requested` if positive, else FRACPQ_THREADS, else hardware.
inline int worker_count(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FRACPQ_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(0..count-1) in waves of at most `workers` concurrent tasks and
/// collects results in index order. Every task owns its inputs (seeded per
/// index), so results do not depend on scheduling.
template <typename Result, typename Fn>
std::vector<Result> run_indexed(int count, int threads, Fn&& fn) {
  std::vector<Result> results(static_cast<std::size_t>(count));
  const int workers = worker_count(threads);
  if (workers <= 1 || count <= 1) {
    for (int k = 0; k < count; ++k) results[static_cast<std::size_t>(k)] = fn(k);
    return results;
  }
  int next = 0;
  while (next < count) {
    const int batch = std::min(workers, count - next);
    std::vector<std::future<Result>> futures;
    futures.reserve(static_cast<std::size_t>(batch));
    for (int k = next; k < next + batch; ++k) {
      futures.push_back(std::async(std::launch::async, [&fn, k]() { return fn(k); }));
    }
    for (int k = 0; k < batch; ++k) {
      results[static_cast<std::size_t>(next + k)] = futures[static_cast<std::size_t>(k)].get();
    }
    next += batch;
  }
  return results;
}

}  // namespace fracpq
