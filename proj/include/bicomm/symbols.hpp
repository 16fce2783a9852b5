#pragma once

#include <map>

#include "bicomm/grid.hpp"

namespace bicomm {
namespace symbols {

inline GridFunction constant(int n1, int n2, double c) { return GridFunction::constant2(n1, n2, c); }

/// b(x1,x2) = d(x1,1/2)^alpha * d(x2,1/2)^beta with periodic distance.
inline GridFunction tensor_holder(int n1, int n2, double alpha, double beta) {
  auto b = GridFunction::zero2(n1, n2);
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 0; i2 < n2; ++i2)
      b.at(i1, i2) = std::pow(torus_dist(b.x1(i1), 0.5), alpha) * std::pow(torus_dist(b.x2(i2), 0.5), beta);
  return b;
}

/// b(x1,x2) = log(d(x1,0)+1/N1): unbounded-looking but x2-independent.
inline GridFunction depends_on_x1_only(int n1, int n2) {
  auto b = GridFunction::zero2(n1, n2);
  for (int i1 = 0; i1 < n1; ++i1) {
    double val = std::log(torus_dist(b.x1(i1), 0.0) + 1.0 / n1);
    for (int i2 = 0; i2 < n2; ++i2) b.at(i1, i2) = val;
  }
  return b;
}

inline GridFunction depends_on_x2_only(int n1, int n2) {
  auto b = GridFunction::zero2(n1, n2);
  for (int i2 = 0; i2 < n2; ++i2) {
    double val = std::log(torus_dist(b.x2(i2), 0.0) + 1.0 / n2);
    for (int i1 = 0; i1 < n1; ++i1) b.at(i1, i2) = val;
  }
  return b;
}

/// Product of logarithmic spikes; the classical BMO-type symbol per axis.
inline GridFunction tensor_log(int n1, int n2) {
  auto b = GridFunction::zero2(n1, n2);
  for (int i1 = 0; i1 < n1; ++i1) {
    double l1 = std::log(1.0 / (torus_dist(b.x1(i1), 0.0) + 1.0 / n1));
    for (int i2 = 0; i2 < n2; ++i2)
      b.at(i1, i2) = l1 * std::log(1.0 / (torus_dist(b.x2(i2), 0.0) + 1.0 / n2));
  }
  return b;
}

/// Integrable power spikes: finite dotted-L^{r_i} norm per axis.
inline GridFunction tensor_lr(int n1, int n2, double r1, double r2) {
  auto b = GridFunction::zero2(n1, n2);
  double a1 = 0.5 / r1, a2 = 0.5 / r2;
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 0; i2 < n2; ++i2)
      b.at(i1, i2) = std::pow(torus_dist(b.x1(i1), 0.0), -a1) * std::pow(torus_dist(b.x2(i2), 0.0), -a2);
  return b;
}

inline GridFunction random2(int n1, int n2, std::uint64_t seed, double amp = 1.0) {
  Rng rng(seed);
  auto b = GridFunction::zero2(n1, n2);
  for (auto& x : b.v) x = amp * (2.0 * rng.uniform() - 1.0);
  return b;
}

inline GridFunction random1(int n1, std::uint64_t seed, double amp = 1.0) {
  Rng rng(seed);
  auto b = GridFunction::zero1(n1);
  for (auto& x : b.v) x = amp * (2.0 * rng.uniform() - 1.0);
  return b;
}

namespace detail {
// Deterministic coefficient in [-1,-1/2] u [1/2,1] for a dyadic address, so
// the same symbol refines consistently as N grows.
inline double cube_coeff(std::uint64_t seed, int axis, int level, int k) {
  std::uint64_t h = splitmix64(seed ^ (std::uint64_t(axis) << 56) ^ (std::uint64_t(level) << 40) ^ std::uint64_t(k));
  double u = double(h >> 11) * 0x1.0p-53;
  double mag = 0.5 + 0.5 * u;
  return (splitmix64(h) & 1u) ? mag : -mag;
}
}  // namespace detail

/// One-parameter Haar synthesis: coefficients |I|^{1/2+gamma} * unit, summed
/// over all cancellative dyadic cubes. gamma > 0 targets the Hoelder class of
/// that exponent, gamma = 0 a BMO-type symbol. Deterministic in (seed).
inline GridFunction haar_synthesis1(int n, std::uint64_t seed, double gamma) {
  auto b = GridFunction::zero1(n);
  int L = log2_exact(n);
  for (int lev = 0; lev < L; ++lev) {
    int cubes = 1 << lev, cells = n >> lev;
    double scale = std::pow(1.0 / cubes, 0.5 + gamma);
    for (int k = 0; k < cubes; ++k) {
      double c = detail::cube_coeff(seed, 1, lev, k) * scale;
      double hval = c * std::sqrt(double(cubes));  // |I|^{-1/2}
      int base = k * cells;
      for (int t = 0; t < cells / 2; ++t) b.v[base + t] += hval;
      for (int t = cells / 2; t < cells; ++t) b.v[base + t] -= hval;
    }
  }
  return b;
}

/// Two-parameter Haar synthesis over dyadic rectangles with per-axis decays
/// (gamma1, gamma2); gamma_i > 0 ~ Hoelder(gamma_i), gamma_i = 0 ~ BMO slot.
inline GridFunction haar_synthesis2(int n1, int n2, std::uint64_t seed, double gamma1, double gamma2) {
  auto b = GridFunction::zero2(n1, n2);
  int L1 = log2_exact(n1), L2 = log2_exact(n2);
  for (int l1 = 0; l1 < L1; ++l1) {
    int cubes1 = 1 << l1, cells1 = n1 >> l1;
    for (int l2 = 0; l2 < L2; ++l2) {
      int cubes2 = 1 << l2, cells2 = n2 >> l2;
      double scale = std::pow(1.0 / cubes1, 0.5 + gamma1) * std::pow(1.0 / cubes2, 0.5 + gamma2);
      double hmag = scale * std::sqrt(double(cubes1)) * std::sqrt(double(cubes2));
      for (int k1 = 0; k1 < cubes1; ++k1)
        for (int k2 = 0; k2 < cubes2; ++k2) {
          std::uint64_t key = splitmix64(seed ^ (std::uint64_t(l1) << 48) ^ (std::uint64_t(l2) << 32) ^
                                         (std::uint64_t(k1) << 16) ^ std::uint64_t(k2));
          double u = 0.5 + 0.5 * (double(key >> 11) * 0x1.0p-53);
          double c = ((splitmix64(key) & 1u) ? u : -u) * hmag;
          int b1 = k1 * cells1, b2 = k2 * cells2;
          for (int t1 = 0; t1 < cells1; ++t1) {
            double s1 = (t1 < cells1 / 2) ? 1.0 : -1.0;
            for (int t2 = 0; t2 < cells2; ++t2) {
              double s2 = (t2 < cells2 / 2) ? 1.0 : -1.0;
              b.at(b1 + t1, b2 + t2) += c * s1 * s2;
            }
          }
        }
    }
  }
  return b;
}

/// Symbol separating the two nested norms C^{0,beta}_{x2}(BMO_{x1}) and the
/// reversed-order BMO_{x1}(C^{0,beta}_{x2}) quantity:
///   b = sum_k log2(1/(d(x1,z_k)+1/N)) * dist(x2, J_k^c)^beta
/// over K spread centers z_k and K disjoint x2-intervals J_k. Within-J_k pairs
/// see one logarithm, whose mean oscillation is O(1); the slice Hoelder norm
/// at x1 is max_k of the logs, which is ~log2 K at typical x1. The gap grows
/// with K while the first norm stays bounded.
inline GridFunction order_gap(int n1, int n2, double beta, int parts) {
  auto b = GridFunction::zero2(n1, n2);
  int K = std::clamp(parts, 2, std::min(16, n2 / 4));
  double ell = 1.0 / K;
  for (int k = 0; k < K; ++k) {
    double zk = (k + 0.37) / K;
    double lo = k * ell, hi = (k + 1) * ell;
    for (int i1 = 0; i1 < n1; ++i1) {
      double lam = std::log2(1.0 / (torus_dist(b.x1(i1), zk) + 1.0 / n1));
      for (int i2 = 0; i2 < n2; ++i2) {
        double x2 = b.x2(i2);
        if (x2 <= lo || x2 >= hi) continue;
        double d = std::min(x2 - lo, hi - x2);
        b.at(i1, i2) += lam * std::pow(d, beta);
      }
    }
  }
  return b;
}

struct SymbolParams {
  std::map<std::string, double> num;
  std::uint64_t seed = 1;
  double get(const std::string& k, double dflt) const {
    auto it = num.find(k);
    return it == num.end() ? dflt : it->second;
  }
};

/// String-dispatched library used by the CLI.
inline GridFunction make(const std::string& name, const SymbolParams& p, int n1, int n2) {
  if (name == "constant") return constant(n1, n2, p.get("c", 3.0));
  if (name == "tensor_holder") return tensor_holder(n1, n2, p.get("alpha", 0.5), p.get("beta", 0.5));
  if (name == "tensor_log") return tensor_log(n1, n2);
  if (name == "tensor_lr") return tensor_lr(n1, n2, p.get("r1", 2.0), p.get("r2", 2.0));
  if (name == "depends_on_x1_only") return depends_on_x1_only(n1, n2);
  if (name == "depends_on_x2_only") return depends_on_x2_only(n1, n2);
  if (name == "random") return random2(n1, n2, p.seed);
  if (name == "haar_synthesis")
    return haar_synthesis2(n1, n2, p.seed, p.get("gamma1", 0.25), p.get("gamma2", 0.25));
  if (name == "order_gap") return order_gap(n1, n2, p.get("beta", 0.25), int(p.get("parts", 12.0)));
  throw std::invalid_argument("configuration error: unknown symbol '" + name + "'");
}

}  // namespace symbols
}  // namespace bicomm
