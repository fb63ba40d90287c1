#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace banditlab {

// Deterministic random source. All simulation randomness flows through this
// wrapper so that a (config, seed) pair replays byte-identically: the
// distributions are hand-rolled on top of the raw 64-bit stream instead of
// relying on the standard library's unspecified distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in {0, ..., n-1}.
  int uniform_int(int n) {
    return static_cast<int>(uniform() * static_cast<double>(n)) % n;
  }

  // Standard normal via Box-Muller, no cached spare: two uniforms per draw,
  // so the consumption pattern is easy to reason about when replaying.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  int sign() { return (gen_() & 1u) ? 1 : -1; }

  // k distinct indices from {0,...,n-1}, partial Fisher-Yates.
  void sample_without_replacement(int n, int k, std::span<int> out) {
    thread_local std::vector<int> pool;
    pool.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + uniform_int(n - i);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
      out[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Derives independent per-purpose streams from an episode seed (splitmix64
// finalizer). Distinct salts give statistically unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace banditlab
