#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bicomm {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(int n) {
  if (!is_pow2(n)) throw std::invalid_argument("log2_exact: not a power of two");
  int l = 0;
  while ((1 << l) < n) ++l;
  return l;
}

/// Nearest periodic representative of t in (-1/2, 1/2]; at the antipode the
/// two representatives +-1/2 are equidistant and callers that need a single
/// signed value must handle that case themselves (see kernel_eval).
inline double torus_rep(double t) {
  t -= std::floor(t);
  if (t > 0.5) t -= 1.0;
  return t;
}

/// Periodic distance on the unit torus, in [0, 1/2].
inline double torus_dist(double a, double b) { return std::abs(torus_rep(a - b)); }

/// Neumaier compensated accumulator. All reductions in this project go through
/// this type in a fixed left-to-right order so results are bit-reproducible.
struct Accum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double get() const { return s + c; }
};

inline double csum(const std::vector<double>& xs) {
  Accum a;
  for (double x : xs) a.add(x);
  return a.get();
}

// splitmix64; used to derive per-object deterministic coefficients.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG (xoshiro-free: repeated splitmix64 stream). The standard
/// distributions are avoided on purpose: their output is not pinned by the
/// standard, and reports must be reproducible for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x6a09e667f3bcc909ULL)) {}
  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Uniform integer in [0, n).
  int below(int n) { return int(next_u64() % std::uint64_t(n)); }
  /// Random sign +-1.
  double sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }
  /// Standard normal (Box-Muller on the deterministic stream).
  double gauss() {
    double u1 = std::max(uniform(), 0x1.0p-60), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

inline int max_threads() {
  static int cached = [] {
    if (const char* env = std::getenv("BICOMM_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return int(std::min<unsigned>(hw == 0 ? 1 : hw, 8));
  }();
  return cached;
}

/// Deterministic parallel loop: [0, n) is split into fixed contiguous chunks
/// that do not depend on the thread count, so any per-chunk reduction combined
/// in chunk order gives the same result serial or parallel.
inline void parallel_for(int n, const std::function<void(int, int)>& chunk_fn) {
  int nt = std::min(max_threads(), std::max(1, n));
  if (nt == 1 || n < 64) {
    chunk_fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  int chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    int lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(chunk_fn, lo, hi);
  }
  for (auto& th : pool) th.join();
}

inline double relerr(double got, double want) {
  double scale = std::max({std::abs(got), std::abs(want), 1e-300});
  return std::abs(got - want) / scale;
}

// p -> p/(p-1); accepts p in (1, inf).
inline double conj_exp(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("conj_exp: p must be in (1,inf)");
  return p / (p - 1.0);
}

}  // namespace bicomm
