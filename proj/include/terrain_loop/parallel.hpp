#ifndef TERRAIN_LOOP_PARALLEL_HPP
#define TERRAIN_LOOP_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace terrain_loop {

/// Worker count: explicit request > TERRAIN_LOOP_THREADS > hardware concurrency.
inline int resolve_threads(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TERRAIN_LOOP_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Runs fn(i) for i in [0, count). Work items must be independent; the
/// chunking is fixed so results cannot depend on the worker count.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, int threads = 0) {
  const int n_threads = resolve_threads(threads);
  if (count == 0) return;
  if (n_threads <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int spawned = static_cast<int>(std::min<std::size_t>(n_threads, count)) - 1;
  pool.reserve(spawned);
  for (int t = 0; t < spawned; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace terrain_loop

#endif
