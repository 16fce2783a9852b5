#pragma once

#include <fstream>
#include <sstream>

#include "bicomm/dyadic.hpp"
#include "bicomm/grid.hpp"

namespace bicomm {

enum class KernelKind { Hilbert, Riesz, CustomTable };

/// A standard kernel on one axis of the torus with its constants. Evaluation
/// uses the nearest periodic representative of x - y; at distance exactly 1/2
/// the two representatives are averaged, which keeps odd kernels odd on the
/// whole grid.
struct KernelSpec {
  KernelKind kind = KernelKind::Hilbert;
  int dim = 1;                // d_i; the desk-scale build uses 1
  int riesz_j = 1;            // component for the Riesz rule
  double size_const = 1.0;    // C_K
  double holder_exp = 1.0;    // alpha_i in (0,1]
  double nondeg_const = 1.0;  // c0
  bool symmetric_nondegenerate = true;
  // custom-table rule: sorted (t, value) samples of K on t in (-1/2, 1/2].
  std::vector<std::pair<double, double>> table;

  static KernelSpec hilbert() { return KernelSpec{}; }
  static KernelSpec riesz(int j) {
    KernelSpec k;
    k.kind = KernelKind::Riesz;
    k.riesz_j = j;
    return k;
  }
};

namespace detail {
inline double kernel_branch_eval(const KernelSpec& K, double t) {
  switch (K.kind) {
    case KernelKind::Hilbert:
      return 1.0 / t;
    case KernelKind::Riesz:
      // one-dimensional axes: (x-y)/|x-y|^{d+1} with d = 1
      return t / std::pow(std::abs(t), K.dim + 1);
    case KernelKind::CustomTable: {
      if (K.table.empty()) throw std::invalid_argument("configuration error: empty kernel table");
      if (t <= K.table.front().first) return K.table.front().second;
      if (t >= K.table.back().first) return K.table.back().second;
      auto hi = std::upper_bound(K.table.begin(), K.table.end(), std::make_pair(t, -1e308));
      auto lo = hi - 1;
      double w = (t - lo->first) / (hi->first - lo->first);
      return (1.0 - w) * lo->second + w * hi->second;
    }
  }
  return 0;
}
}  // namespace detail

/// K(x, y) on the nearest periodic representative. x == y is a singularity.
inline double kernel_eval(const KernelSpec& K, double x, double y) {
  double t = x - y;
  t -= std::floor(t);  // in [0,1)
  if (t == 0.0) throw std::domain_error("singularity error: kernel evaluated on the diagonal");
  if (t == 0.5) return 0.5 * (detail::kernel_branch_eval(K, 0.5) + detail::kernel_branch_eval(K, -0.5));
  if (t > 0.5) t -= 1.0;
  return detail::kernel_branch_eval(K, t);
}

/// Loads a custom kernel from CSV lines "t,value" (testing hook).
inline KernelSpec load_kernel_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("I/O error: cannot open kernel table " + path);
  KernelSpec K;
  K.kind = KernelKind::CustomTable;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double t, v;
    if (ls >> t >> v) K.table.emplace_back(t, v);
  }
  std::sort(K.table.begin(), K.table.end());
  if (K.table.empty()) throw std::runtime_error("parse error: kernel table has no rows");
  return K;
}

struct KernelVerifyReport {
  double worst_size_ratio = 0.0;    // sup |K| d^dim / C_K
  double worst_holder_ratio = 0.0;  // sup |dK| |x-y|^{dim+alpha} / (C_K |x-x'|^alpha)
  int samples = 0;
};

/// Samples off-diagonal pairs and Hoelder triples (|x-x'| <= |x-y|/2, branch-
/// consistent representatives: the torus-wrapped kernel is Hoelder on each
/// representative branch, and all downstream geometry stays within a branch).
inline KernelVerifyReport verify_kernel(const KernelSpec& K, int sample_budget, std::uint64_t seed = 7) {
  Rng rng(seed);
  KernelVerifyReport rep;
  rep.samples = sample_budget;
  for (int s = 0; s < sample_budget; ++s) {
    double x = rng.uniform(), y = rng.uniform();
    double d = torus_dist(x, y);
    if (d < 1e-6) continue;
    double k = kernel_eval(K, x, y);
    rep.worst_size_ratio = std::max(rep.worst_size_ratio, std::abs(k) * std::pow(d, K.dim) / K.size_const);
    // Hoelder triple: move x by at most d/2 without crossing the antipodal cut.
    double step = rng.uniform(0.0, 0.5) * d;
    double xp = x + (torus_rep(x - y) > 0 ? -step : step);  // move toward y: stays on branch
    double dp = torus_dist(xp, y);
    if (dp < 1e-9 || step < 1e-9) continue;
    double kp = kernel_eval(K, xp, y);
    double lhs = std::abs(k - kp) + std::abs(kernel_eval(K, y, x) - kernel_eval(K, y, xp));
    double bound = K.size_const * std::pow(step, K.holder_exp) / std::pow(d, K.dim + K.holder_exp);
    rep.worst_holder_ratio = std::max(rep.worst_holder_ratio, lhs / bound);
  }
  return rep;
}

/// Truncated discrete operator bound to a grid axis: T_eps f(x) =
/// sum_{d(x,y) > eps} K(x,y) f(y) / N. The fixed-eps operator is the object
/// under study; eps defaults to one grid cell.
struct OperatorHandle {
  KernelSpec kernel;
  int n = 0;            // resolution of the axis it acts on
  double eps = 0.0;     // truncation radius
  std::vector<double> mat;  // dense N x N matrix, row x, col y (includes 1/N weight)

  static OperatorHandle bind(const KernelSpec& K, int n, double eps = -1.0) {
    if (!is_pow2(n)) throw std::invalid_argument("resolution: operator grid must be a power of two");
    OperatorHandle T;
    T.kernel = K;
    T.n = n;
    T.eps = eps < 0 ? 1.0 / n : eps;
    if (T.eps < 1.0 / n - 1e-15) throw std::invalid_argument("truncation error: eps below grid spacing");
    T.mat.assign(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      double x = (i + 0.5) / n;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        double y = (j + 0.5) / n;
        if (torus_dist(x, y) > T.eps + 1e-15) T.mat[std::size_t(i) * n + j] = kernel_eval(K, x, y) / n;
      }
    }
    return T;
  }
};

namespace detail {
// out(x, .) = sum_y M[x][y] f(y, .) along the named axis; adjoint transposes.
inline GridFunction apply_matrix_axis(const std::vector<double>& M, int n, const GridFunction& f, bool adjoint,
                                      int axis) {
  GridFunction out = f.params == 1 ? GridFunction::zero1(f.n1, f.comps) : GridFunction::zero2(f.n1, f.n2, f.comps);
  auto entry = [&](int i, int j) { return adjoint ? M[std::size_t(j) * n + i] : M[std::size_t(i) * n + j]; };
  if (f.params == 1 || axis == 1) {
    if (grid_n(f, 1) != n) throw std::invalid_argument("alignment error: operator grid mismatch");
    int width = f.params == 1 ? f.comps : f.n2 * f.comps;
    parallel_for(f.n1, [&](int lo, int hi) {
      for (int i = lo; i < hi; ++i) {
        double* dst = &out.v[std::size_t(i) * width];
        for (int j = 0; j < n; ++j) {
          double w = entry(i, j);
          if (w == 0.0) continue;
          const double* src = &f.v[std::size_t(j) * width];
          for (int c = 0; c < width; ++c) dst[c] += w * src[c];
        }
      }
    });
    return out;
  }
  if (f.n2 != n) throw std::invalid_argument("alignment error: operator grid mismatch");
  parallel_for(f.n1, [&](int lo, int hi) {
    for (int r = lo; r < hi; ++r) {
      const double* src = &f.v[std::size_t(r) * f.n2 * f.comps];
      double* dst = &out.v[std::size_t(r) * f.n2 * f.comps];
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          double w = entry(i, j);
          if (w == 0.0) continue;
          for (int c = 0; c < f.comps; ++c) dst[std::size_t(i) * f.comps + c] += w * src[std::size_t(j) * f.comps + c];
        }
    }
  });
  return out;
}
}  // namespace detail

/// Applies the truncated operator (or its adjoint) along the named axis of f.
inline GridFunction apply(const OperatorHandle& T, const GridFunction& f, bool adjoint = false, int axis = 1) {
  return detail::apply_matrix_axis(T.mat, T.n, f, adjoint, axis);
}

/// T_* f(x) = max over grid-representable eps of |T_eps f(x)| (one-parameter).
inline GridFunction maximal_truncation(const OperatorHandle& T, const GridFunction& f) {
  if (f.params != 1 || f.comps != 1 || f.n1 != T.n) throw std::invalid_argument("maximal_truncation: bound 1-param grid");
  int n = T.n;
  auto out = GridFunction::zero1(n);
  parallel_for(n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      double x = (i + 0.5) / n;
      // cells sorted by distance from x: add shells as eps decreases
      std::vector<std::pair<double, int>> shell;
      shell.reserve(n);
      for (int j = 0; j < n; ++j)
        if (j != i) shell.emplace_back(torus_dist(x, (j + 0.5) / n), j);
      std::sort(shell.begin(), shell.end(),
                [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
      double sum = 0.0, best = 0.0;
      std::size_t t = 0;
      while (t < shell.size()) {
        double d = shell[t].first;
        while (t < shell.size() && shell[t].first == d) {
          int j = shell[t].second;
          sum += kernel_eval(T.kernel, x, (j + 0.5) / n) * f.v[j] / n;
          ++t;
        }
        // state equals T_eps for representable eps in [max(prev, 1/n), d)
        if (d > T.eps + 1e-15) best = std::max(best, std::abs(sum));
      }
      out.v[i] = best;
    }
  });
  return out;
}

struct CotlarReport {
  double fitted_constant = 0.0;  // max_x T_*f / (M_r(Tf) + Mf)
};

/// Pointwise Cotlar comparison T_* f <= C (M_r(Tf) + Mf); returns the fitted C.
inline CotlarReport cotlar_check(const OperatorHandle& T, const GridFunction& f, double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("cotlar_check: r in (0,1)");
  auto tstar = maximal_truncation(T, f);
  auto tf = apply(T, f);
  auto m1 = maximal_axis(tf, 1, r);
  auto m2 = maximal_axis(f, 1, 1.0);
  double c = 0;
  for (int i = 0; i < f.n1; ++i) {
    double denom = m1.v[i] + m2.v[i];
    if (denom > 1e-14) c = std::max(c, tstar.v[i] / denom);
  }
  return CotlarReport{c};
}

/// Reflected interval of I at scale A: equal side length, center at distance
/// ~ A ell(I) where |K| is quantitatively large. Candidates are scanned on the
/// grid at distances in [A ell, min(2 A ell, 1/2 - ell)]; the maximizer of
/// min(|K(c~,c)|, |K(c,c~)|) wins, and ties alternate direction with the
/// parity of the cube address so that reflecting twice returns I exactly.
inline Interval reflected_cube(const KernelSpec& K, const Interval& I, double A) {
  if (A < 3.0) throw std::invalid_argument("reflected_cube: A >= 3 required");
  int n = I.n;
  double ell = I.ell();
  if (A * ell > 0.5 + 1e-12) throw std::invalid_argument("geometry error: reflected cube would wrap onto I");
  double c = I.center();
  int lo = int(std::floor(A * ell * n + 0.5));                    // displacement in cells
  int hi = int(std::floor(std::min(2.0 * A * ell, 0.5) * n));
  hi = std::max(hi, lo);
  double bestval = -1.0;
  int bestd = lo;
  int bestsgn = +1;
  // Direction for tied kernel values alternates with the phase of the center
  // along the 2*A*ell lattice (half-cell units), so reflecting twice is the
  // identity whenever the scan lands on the minimal distance.
  int C = 2 * I.start + I.len, D = 2 * std::max(1, lo);
  int phase = C % (2 * D);
  int prefer = phase < D ? +1 : -1;
  for (int d = lo; d <= hi; ++d) {
    for (int s : {prefer, -prefer}) {
      double cc = c + s * double(d) / n;
      double v = std::min(std::abs(kernel_eval(K, cc, c)), std::abs(kernel_eval(K, c, cc)));
      if (v > bestval + 1e-15) {
        bestval = v;
        bestd = d;
        bestsgn = s;
      }
    }
  }
  int start = I.start + bestsgn * bestd;
  start %= n;
  if (start < 0) start += n;
  return Interval{start, I.len, n};
}

/// I_beta f = sum_y f(y) / d(x,y)^{dim-beta} / N, diagonal cell replaced by the
/// exact integral of the cell against a constant: (2/beta) (1/(2N))^beta f(x).
inline GridFunction fractional_integral(const GridFunction& f, double beta, int axis = 1) {
  if (!(beta > 0.0 && beta < 1.0 + 1e-15)) throw std::invalid_argument("parameter error: beta in (0, d)");
  int n = grid_n(f, f.params == 1 ? 1 : axis);
  std::vector<double> M(std::size_t(n) * n, 0.0);
  double self = 2.0 / beta * std::pow(0.5 / n, beta);
  for (int i = 0; i < n; ++i) {
    M[std::size_t(i) * n + i] = self;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double d = torus_dist((i + 0.5) / n, (j + 0.5) / n);
      M[std::size_t(i) * n + j] = std::pow(d, beta - 1.0) / n;
    }
  }
  return detail::apply_matrix_axis(M, n, f, false, f.params == 1 ? 1 : axis);
}

struct T1Report {
  double ratio = 0.0;  // (int_I |T 1_I| + int_I |T* 1_I|) / |I|
};

inline T1Report t1_test(const OperatorHandle& T, const Interval& I) {
  if (I.n != T.n) throw std::invalid_argument("alignment error: t1_test interval grid mismatch");
  auto ind = GridFunction::zero1(T.n);
  for (int t = 0; t < I.len; ++t) ind.v[I.cell(t)] = 1.0;
  auto a = apply(T, ind, false, 1);
  auto b = apply(T, ind, true, 1);
  Accum acc;
  for (int t = 0; t < I.len; ++t) {
    int i = I.cell(t);
    acc.add(std::abs(a.v[i]) + std::abs(b.v[i]));
  }
  return T1Report{acc.get() / T.n / I.ell()};
}

}  // namespace bicomm
