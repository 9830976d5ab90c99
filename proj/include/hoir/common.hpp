#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace hoir {

// Base error for everything raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration problems (bad files, invalid combinations). CLI exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// splitmix64, used to derive independent RNG streams from a master seed.
inline uint64_t hash_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return hash_seed(master ^ hash_seed(stream + 0x51ed270b7fULL));
}

// Deterministic RNG. The generator is std::mt19937_64 (fully specified by the
// standard); the distributions are implemented here because the standard
// library's are implementation-defined and would break cross-platform
// reproducibility of datasets and checkpoints.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() {
    // xorshift-star-free: delegate to mt19937_64 lazily constructed per seed
    // would cost 2.5KB per stream; a splitmix64 walk is enough here and is
    // the documented fixed algorithm.
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased enough for index selection; n must be > 0.
  uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

  // Box-Muller; one value per call, the twin is discarded to keep the
  // stream position independent of call parity bookkeeping.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  uint64_t state_;
};

// FNV-1a over bytes, used for dataset audit hashes in run logs.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream tag -> seed material, e.g. derive_seed(master, hash_seed("views")).
inline uint64_t hash_seed(std::string_view tag) { return fnv1a(tag.data(), tag.size()); }

// Worker cap shared by all parallel loops. HOIR_THREADS env overrides;
// set_max_threads overrides both (used by the determinism tests).
int max_threads();
void set_max_threads(int n);

// Chunked parallel map over [0, n). Work items must write disjoint outputs;
// chunk boundaries are a pure function of (n, threads) so results do not
// depend on scheduling.
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& chunk_fn);

}  // namespace hoir
