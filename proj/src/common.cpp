#include "hoir/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

namespace hoir {

namespace {

std::atomic<int> g_max_threads{0};  // 0 = not yet resolved

int resolve_default() {
  if (const char* env = std::getenv("HOIR_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

int max_threads() {
  int n = g_max_threads.load();
  if (n <= 0) {
    n = resolve_default();
    g_max_threads.store(n);
  }
  return n;
}

void set_max_threads(int n) { g_max_threads.store(n > 0 ? n : 1); }

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& chunk_fn) {
  if (n == 0) return;
  size_t workers = static_cast<size_t>(max_threads());
  workers = std::min(workers, n);
  if (workers <= 1) {
    chunk_fn(0, n);
    return;
  }
  size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    size_t lo = w * chunk;
    size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&chunk_fn, lo, hi] { chunk_fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace hoir
