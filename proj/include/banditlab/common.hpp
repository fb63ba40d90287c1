#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace banditlab {

using Vec = std::vector<double>;

// Thrown when an iterative solver exhausts its iteration cap. Never a
// silent fallback: callers must treat this as a hard failure.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a strategy reads feedback that the starved-bandit protocol
// withheld from it.
class StarvedContractError : public std::logic_error {
 public:
  StarvedContractError() : std::logic_error("read of withheld starved-bandit feedback") {}
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sum(std::span<const double> a) {
  return std::accumulate(a.begin(), a.end(), 0.0);
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }

// ||a||_r for r >= 1. r = infinity is not needed here.
inline double lp_norm(std::span<const double> a, double r) {
  double s = 0.0;
  for (double v : a) s += std::pow(std::abs(v), r);
  return std::pow(s, 1.0 / r);
}

inline std::size_t argmin_index(std::span<const double> a) {
  if (a.empty()) throw std::invalid_argument("argmin of empty range");
  return static_cast<std::size_t>(std::min_element(a.begin(), a.end()) - a.begin());
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_finite(std::span<const double> a, const char* name) {
  if (!all_finite(a))
    throw std::invalid_argument(std::string(name) + ": non-finite entry");
}

// FNV-1a over a byte string; used to stamp configs into output files.
inline std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace banditlab
