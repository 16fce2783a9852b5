#pragma once

#include "bicomm/grid.hpp"

namespace bicomm {

/// Address of a dyadic cube on one axis of the torus: level j, index k.
struct DyadicCube {
  int axis = 1;  // 1 or 2
  int level = 0;
  int k = 0;
  double ell() const { return std::pow(2.0, -level); }
  Interval interval(int n) const {
    int cells = n >> level;
    if (cells < 1) throw std::invalid_argument("resolution error: cube below grid resolution");
    return Interval{k * cells, cells, n};
  }
  DyadicCube parent(int up = 1) const {
    if (level - up < 0) throw std::invalid_argument("resolution error: no ancestor above the top cube");
    return DyadicCube{axis, level - up, k >> up};
  }
  bool operator==(const DyadicCube&) const = default;
};

struct DyadicRectangle {
  DyadicCube c1{1, 0, 0}, c2{2, 0, 0};
  Rect rect(int n1, int n2) const { return Rect{c1.interval(n1), c2.interval(n2)}; }
};

/// Haar signature: eta=1 cancellative (the only cancellative signature for
/// one-dimensional axes), eta=0 the non-cancellative normalized indicator.
struct HaarIndex {
  DyadicCube cube;
  int eta = 1;
};

inline int grid_n(const GridFunction& f, int axis) { return axis == 1 ? f.n1 : f.n2; }

/// L^2-normalized Haar function of one cube, as a one-parameter GridFunction
/// on that axis' grid.
inline GridFunction haar(const HaarIndex& ix, int n) {
  Interval I = ix.cube.interval(n);
  auto h = GridFunction::zero1(n);
  double mag = 1.0 / std::sqrt(I.ell());
  if (ix.eta == 0) {
    for (int t = 0; t < I.len; ++t) h.v[I.cell(t)] = mag;
    return h;
  }
  if (I.len < 2) throw std::invalid_argument("resolution error: cancellative Haar needs >= 2 cells");
  for (int t = 0; t < I.len / 2; ++t) h.v[I.cell(t)] = mag;
  for (int t = I.len / 2; t < I.len; ++t) h.v[I.cell(t)] = -mag;
  return h;
}

/// Tensor Haar h_R = h_{I1} x h_{I2} on the two-parameter grid.
inline GridFunction haar2(const DyadicRectangle& R, int n1, int n2) {
  auto h1 = haar({R.c1, 1}, n1);
  auto h2 = haar({R.c2, 1}, n2);
  auto out = GridFunction::zero2(n1, n2);
  for (int i1 = 0; i1 < n1; ++i1) {
    if (h1.v[i1] == 0) continue;
    for (int i2 = 0; i2 < n2; ++i2) out.at(i1, i2) = h1.v[i1] * h2.v[i2];
  }
  return out;
}

/// <f, h_I> on the named axis. For two-parameter f the result is the partial
/// pairing (a one-parameter function of the other variable); `comps` carries
/// through componentwise.
inline double haar_coeff(const GridFunction& f, const HaarIndex& ix) {
  if (f.params != 1 || f.comps != 1) throw std::invalid_argument("haar_coeff: scalar one-parameter input");
  Interval I = ix.cube.interval(f.n1);
  double mag = 1.0 / std::sqrt(I.ell());
  Accum a;
  if (ix.eta == 0) {
    for (int t = 0; t < I.len; ++t) a.add(f.v[I.cell(t)]);
    return a.get() * mag / f.n1;
  }
  for (int t = 0; t < I.len / 2; ++t) a.add(f.v[I.cell(t)]);
  for (int t = I.len / 2; t < I.len; ++t) a.add(-f.v[I.cell(t)]);
  return a.get() * mag / f.n1;
}

inline double haar_coeff2(const GridFunction& f, const DyadicRectangle& R) {
  if (f.params != 2 || f.comps != 1) throw std::invalid_argument("haar_coeff2: scalar two-parameter input");
  Interval I1 = R.c1.interval(f.n1), I2 = R.c2.interval(f.n2);
  double mag = 1.0 / std::sqrt(I1.ell() * I2.ell());
  Accum a;
  for (int t1 = 0; t1 < I1.len; ++t1) {
    double s1 = t1 < I1.len / 2 ? 1.0 : -1.0;
    for (int t2 = 0; t2 < I2.len; ++t2) {
      double s2 = t2 < I2.len / 2 ? 1.0 : -1.0;
      a.add(s1 * s2 * f.at(I1.cell(t1), I2.cell(t2)));
    }
  }
  return a.get() * mag / (double(f.n1) * f.n2);
}

namespace detail {

// Averages of every contiguous block of `cells` samples along the given axis
// (componentwise). Returned array matches f's layout with the axis collapsed
// to blocks; used by the martingale operators.
inline void axis_block_means(const GridFunction& f, int axis, int level, std::vector<double>& out) {
  int n = grid_n(f, axis);
  int cells = n >> level;
  if (cells < 1) throw std::invalid_argument("resolution error: block deeper than grid resolution");
  int blocks = 1 << level;
  if (axis == 1) {
    out.assign(std::size_t(blocks) * f.n2 * f.comps, 0.0);
    for (int bk = 0; bk < blocks; ++bk)
      for (int t = 0; t < cells; ++t) {
        const double* src = &f.v[std::size_t(bk * cells + t) * f.n2 * f.comps];
        double* dst = &out[std::size_t(bk) * f.n2 * f.comps];
        for (int j = 0; j < f.n2 * f.comps; ++j) dst[j] += src[j];
      }
    for (auto& x : out) x /= cells;
  } else {
    out.assign(std::size_t(f.n1) * blocks * f.comps, 0.0);
    for (int i1 = 0; i1 < f.n1; ++i1)
      for (int bk = 0; bk < blocks; ++bk)
        for (int t = 0; t < cells; ++t)
          for (int c = 0; c < f.comps; ++c)
            out[(std::size_t(i1) * blocks + bk) * f.comps + c] += f.v[(std::size_t(i1) * f.n2 + bk * cells + t) * f.comps + c];
    for (auto& x : out) x /= cells;
  }
}

}  // namespace detail

/// E_Q f = <f>_Q 1_Q on the cube's axis (conditional expectation restricted
/// to one cube).
inline GridFunction martingale_E(const GridFunction& f, const DyadicCube& Q) {
  int n = grid_n(f, Q.axis);
  Interval I = Q.interval(n);
  GridFunction out = f.params == 1 ? GridFunction::zero1(f.n1, f.comps) : GridFunction::zero2(f.n1, f.n2, f.comps);
  if (f.params == 1) {
    std::vector<double> mean(f.comps, 0.0);
    for (int t = 0; t < I.len; ++t)
      for (int c = 0; c < f.comps; ++c) mean[c] += f.v[std::size_t(I.cell(t)) * f.comps + c];
    for (auto& m : mean) m /= I.len;
    for (int t = 0; t < I.len; ++t)
      for (int c = 0; c < f.comps; ++c) out.v[std::size_t(I.cell(t)) * f.comps + c] = mean[c];
    return out;
  }
  if (Q.axis == 1) {
    std::vector<double> mean(std::size_t(f.n2) * f.comps, 0.0);
    for (int t = 0; t < I.len; ++t)
      for (int j = 0; j < f.n2 * f.comps; ++j) mean[j] += f.v[std::size_t(I.cell(t)) * f.n2 * f.comps + j];
    for (auto& m : mean) m /= I.len;
    for (int t = 0; t < I.len; ++t)
      for (int j = 0; j < f.n2 * f.comps; ++j) out.v[std::size_t(I.cell(t)) * f.n2 * f.comps + j] = mean[j];
    return out;
  }
  for (int i1 = 0; i1 < f.n1; ++i1) {
    std::vector<double> mean(f.comps, 0.0);
    for (int t = 0; t < I.len; ++t)
      for (int c = 0; c < f.comps; ++c) mean[c] += f.v[(std::size_t(i1) * f.n2 + I.cell(t)) * f.comps + c];
    for (auto& m : mean) m /= I.len;
    for (int t = 0; t < I.len; ++t)
      for (int c = 0; c < f.comps; ++c) out.v[(std::size_t(i1) * f.n2 + I.cell(t)) * f.comps + c] = mean[c];
  }
  return out;
}

/// Martingale difference Delta_Q f = sum_{children} E_{Q'} f - E_Q f.
inline GridFunction martingale_delta(const GridFunction& f, const DyadicCube& Q) {
  int n = grid_n(f, Q.axis);
  if ((n >> Q.level) < 2) throw std::invalid_argument("resolution error: no children below this cube");
  auto out = martingale_E(f, DyadicCube{Q.axis, Q.level + 1, 2 * Q.k});
  out += martingale_E(f, DyadicCube{Q.axis, Q.level + 1, 2 * Q.k + 1});
  out -= martingale_E(f, Q);
  return out;
}

/// Martingale block Delta_{Q,k} f = sum_{S: S^{(k)} = Q} Delta_S f.
inline GridFunction martingale_block(const GridFunction& f, const DyadicCube& Q, int depth) {
  if (depth < 0) throw std::invalid_argument("martingale_block: depth >= 0");
  GridFunction out = f.params == 1 ? GridFunction::zero1(f.n1, f.comps) : GridFunction::zero2(f.n1, f.n2, f.comps);
  int lev = Q.level + depth;
  for (int d = 0; d < (1 << depth); ++d) out += martingale_delta(f, DyadicCube{Q.axis, lev, (Q.k << depth) + d});
  return out;
}

/// Delta_R f = Delta^1_{I1} Delta^2_{I2} f.
inline GridFunction martingale_delta2(const GridFunction& f, const DyadicRectangle& R) {
  return martingale_delta(martingale_delta(f, R.c1), R.c2);
}

/// Bi-parameter block Delta_R^{j1,j2} f.
inline GridFunction martingale_block2(const GridFunction& f, const DyadicRectangle& R, int j1, int j2) {
  return martingale_block(martingale_block(f, R.c1, j1), R.c2, j2);
}

/// Fast full Haar analysis along one axis: all Delta-level coefficients at
/// once via iterated halving. coeff[level][block-layout]. Level L-1 finest.
struct AxisHaarTransform {
  // means[lev] holds block means at that level (lev = 0 .. L), blocks = 2^lev.
  std::vector<std::vector<double>> means;
  int L = 0;
};

inline AxisHaarTransform axis_means_pyramid(const GridFunction& f, int axis) {
  AxisHaarTransform T;
  int n = grid_n(f, axis);
  T.L = log2_exact(n);
  T.means.resize(T.L + 1);
  detail::axis_block_means(f, axis, T.L, T.means[T.L]);  // cell level (identity along that axis)
  int other = (axis == 1) ? f.n2 * f.comps : f.comps;
  int stride1 = (axis == 1) ? 1 : 0;  // marker only
  (void)stride1;
  for (int lev = T.L; lev-- > 0;) {
    const auto& fine = T.means[lev + 1];
    auto& coarse = T.means[lev];
    int blocks = 1 << lev;
    if (axis == 1) {
      coarse.assign(std::size_t(blocks) * other, 0.0);
      for (int bk = 0; bk < blocks; ++bk)
        for (int j = 0; j < other; ++j)
          coarse[std::size_t(bk) * other + j] =
              0.5 * (fine[std::size_t(2 * bk) * other + j] + fine[std::size_t(2 * bk + 1) * other + j]);
    } else {
      int rows = f.n1;
      int fb = 2 * blocks;
      coarse.assign(std::size_t(rows) * blocks * f.comps, 0.0);
      for (int i1 = 0; i1 < rows; ++i1)
        for (int bk = 0; bk < blocks; ++bk)
          for (int c = 0; c < f.comps; ++c)
            coarse[(std::size_t(i1) * blocks + bk) * f.comps + c] =
                0.5 * (fine[(std::size_t(i1) * fb + 2 * bk) * f.comps + c] +
                       fine[(std::size_t(i1) * fb + 2 * bk + 1) * f.comps + c]);
    }
  }
  return T;
}

// ---------------------------------------------------------------------------
// Block-mean pyramid: means over dyadic rectangles at every level pair.
// ---------------------------------------------------------------------------

/// P(l1, l2) holds the block means of f over level-(l1,l2) dyadic rectangles,
/// componentwise; an O(1) lookup gives E^1_{l1} E^2_{l2} f at any point.
struct MeanPyramid {
  int L1 = 0, L2 = 0, n1 = 0, n2 = 0, comps = 1;
  std::vector<std::vector<double>> data;  // [(l1)*(L2+1)+l2][(k1* 2^l2 + k2)*comps + c]

  explicit MeanPyramid(const GridFunction& f) {
    L1 = log2_exact(f.n1);
    L2 = f.params == 2 ? log2_exact(f.n2) : 0;
    n1 = f.n1;
    n2 = f.n2;
    comps = f.comps;
    data.resize(std::size_t(L1 + 1) * (L2 + 1));
    at(L1, L2) = f.v;
    for (int l2 = L2; l2-- > 0;) {
      const auto& fine = at(L1, l2 + 1);
      auto& coarse = at(L1, l2);
      int b2 = 1 << l2;
      coarse.assign(std::size_t(n1) * b2 * comps, 0.0);
      for (int k1 = 0; k1 < n1; ++k1)
        for (int k2 = 0; k2 < b2; ++k2)
          for (int c = 0; c < comps; ++c)
            coarse[(std::size_t(k1) * b2 + k2) * comps + c] =
                0.5 * (fine[(std::size_t(k1) * 2 * b2 + 2 * k2) * comps + c] +
                       fine[(std::size_t(k1) * 2 * b2 + 2 * k2 + 1) * comps + c]);
    }
    for (int l1 = L1; l1-- > 0;)
      for (int l2 = 0; l2 <= L2; ++l2) {
        const auto& fine = at(l1 + 1, l2);
        auto& coarse = at(l1, l2);
        int b1 = 1 << l1, b2 = 1 << l2;
        coarse.assign(std::size_t(b1) * b2 * comps, 0.0);
        for (int k1 = 0; k1 < b1; ++k1)
          for (int k2 = 0; k2 < b2; ++k2)
            for (int c = 0; c < comps; ++c)
              coarse[(std::size_t(k1) * b2 + k2) * comps + c] =
                  0.5 * (fine[(std::size_t(2 * k1) * b2 + k2) * comps + c] +
                         fine[(std::size_t(2 * k1 + 1) * b2 + k2) * comps + c]);
      }
  }
  std::vector<double>& at(int l1, int l2) { return data[std::size_t(l1) * (L2 + 1) + l2]; }
  const std::vector<double>& at(int l1, int l2) const { return data[std::size_t(l1) * (L2 + 1) + l2]; }
  // E^1_{l1} E^2_{l2} f at grid point (i1, i2), component c
  double E(int l1, int l2, int i1, int i2, int c = 0) const {
    int k1 = i1 >> (L1 - l1), k2 = i2 >> (L2 - l2);
    return at(l1, l2)[(std::size_t(k1) * (1 << l2) + k2) * comps + c];
  }
};


enum class SquareVariant { SD, S1, S2, SD1_M2, SD2_M1 };

/// Dyadic maximal function along one axis (sup over dyadic cubes of that axis
/// containing the point, of the |f|^r-average, then r-th root). r > 0.
inline GridFunction maximal_axis(const GridFunction& f, int axis, double r = 1.0) {
  if (!(r > 0)) throw std::invalid_argument("maximal: r must be positive");
  if (f.comps != 1) throw std::invalid_argument("maximal: scalar input");
  GridFunction g = f;
  for (auto& x : g.v) x = (r == 1.0) ? std::abs(x) : std::pow(std::abs(x), r);
  auto T = axis_means_pyramid(g, f.params == 1 ? 1 : axis);
  GridFunction out = f.params == 1 ? GridFunction::zero1(f.n1) : GridFunction::zero2(f.n1, f.n2);
  int ax = f.params == 1 ? 1 : axis;
  int n = grid_n(f, ax);
  if (f.params == 1) {
    for (int i = 0; i < f.n1; ++i) {
      double m = 0;
      for (int lev = 0; lev <= T.L; ++lev) m = std::max(m, T.means[lev][i >> (T.L - lev)]);
      out.v[i] = (r == 1.0) ? m : std::pow(m, 1.0 / r);
    }
    return out;
  }
  int L = log2_exact(n);
  for (int i1 = 0; i1 < f.n1; ++i1)
    for (int i2 = 0; i2 < f.n2; ++i2) {
      double m = 0;
      int pos = ax == 1 ? i1 : i2;
      for (int lev = 0; lev <= L; ++lev) {
        int bk = pos >> (L - lev);
        double val = ax == 1 ? T.means[lev][std::size_t(bk) * f.n2 + i2] : T.means[lev][std::size_t(i1) * (1 << lev) + bk];
        m = std::max(m, val);
      }
      out.at(i1, i2) = (r == 1.0) ? m : std::pow(m, 1.0 / r);
    }
  return out;
}

/// Full bi-parameter dyadic maximal function over dyadic rectangles.
inline GridFunction maximal_rect(const GridFunction& f, double r = 1.0) {
  if (!(r > 0)) throw std::invalid_argument("maximal: r must be positive");
  if (f.params != 2 || f.comps != 1) throw std::invalid_argument("maximal_rect: scalar two-parameter input");
  GridFunction g = f;
  for (auto& x : g.v) x = (r == 1.0) ? std::abs(x) : std::pow(std::abs(x), r);
  int L1 = log2_exact(f.n1), L2 = log2_exact(f.n2);
  // means[l1][l2] computed level pair by level pair, peak memory one row.
  std::vector<std::vector<double>> row(L2 + 1);
  auto out = GridFunction::zero2(f.n1, f.n2);
  // Precompute axis-2 pyramids of g once, then collapse axis 1 level by level.
  std::vector<std::vector<double>> ax2(L2 + 1);
  {
    auto T2 = axis_means_pyramid(g, 2);
    for (int l2 = 0; l2 <= L2; ++l2) ax2[l2] = std::move(T2.means[l2]);
  }
  for (int l1 = L1; l1 >= 0; --l1) {
    int blocks1 = 1 << l1, cells1 = f.n1 >> l1;
    for (int l2 = 0; l2 <= L2; ++l2) {
      int blocks2 = 1 << l2;
      row[l2].assign(std::size_t(blocks1) * blocks2, 0.0);
      for (int b1 = 0; b1 < blocks1; ++b1)
        for (int t = 0; t < cells1; ++t)
          for (int b2 = 0; b2 < blocks2; ++b2)
            row[l2][std::size_t(b1) * blocks2 + b2] += ax2[l2][std::size_t(b1 * cells1 + t) * blocks2 + b2];
      for (auto& x : row[l2]) x /= cells1;
    }
    for (int i1 = 0; i1 < f.n1; ++i1) {
      int b1 = i1 >> (L1 - l1);
      for (int i2 = 0; i2 < f.n2; ++i2) {
        double cur = out.at(i1, i2);
        for (int l2 = 0; l2 <= L2; ++l2) {
          int b2 = i2 >> (L2 - l2);
          cur = std::max(cur, row[l2][std::size_t(b1) * (1 << l2) + b2]);
        }
        out.at(i1, i2) = cur;
      }
    }
  }
  if (r != 1.0)
    for (auto& x : out.v) x = std::pow(std::max(x, 0.0), 1.0 / r);
  return out;
}

/// Square functions of the finite lattice. SD sums over cancellative dyadic
/// rectangles, S1/S2 over one-axis martingale differences, and the hybrid
/// variants put the dyadic maximal in the other slot.
inline GridFunction square_function(const GridFunction& f, SquareVariant variant) {
  if (f.params != 2 || f.comps != 1) throw std::invalid_argument("square_function: scalar two-parameter input");
  int L1 = log2_exact(f.n1), L2 = log2_exact(f.n2);
  auto out = GridFunction::zero2(f.n1, f.n2);
  if (variant == SquareVariant::S1 || variant == SquareVariant::S2) {
    // per-axis differences through the mean pyramid: O(N^2 log N)
    MeanPyramid P(f);
    int axis = variant == SquareVariant::S1 ? 1 : 2;
    int L = axis == 1 ? L1 : L2;
    for (int i1 = 0; i1 < f.n1; ++i1)
      for (int i2 = 0; i2 < f.n2; ++i2) {
        Accum a;
        for (int l = 0; l < L; ++l) {
          double d = axis == 1 ? P.E(l + 1, L2, i1, i2) - P.E(l, L2, i1, i2)
                               : P.E(L1, l + 1, i1, i2) - P.E(L1, l, i1, i2);
          a.add(d * d);
        }
        out.at(i1, i2) = a.get();
      }
  } else if (variant == SquareVariant::SD) {
    MeanPyramid P(f);
    for (int i1 = 0; i1 < f.n1; ++i1)
      for (int i2 = 0; i2 < f.n2; ++i2) {
        Accum a;
        for (int l1 = 0; l1 < L1; ++l1)
          for (int l2 = 0; l2 < L2; ++l2) {
            double d = P.E(l1 + 1, l2 + 1, i1, i2) - P.E(l1, l2 + 1, i1, i2) - P.E(l1 + 1, l2, i1, i2) +
                       P.E(l1, l2, i1, i2);
            a.add(d * d);
          }
        out.at(i1, i2) = a.get();
      }
  } else {
    int haxis = variant == SquareVariant::SD1_M2 ? 1 : 2;
    int n = haxis == 1 ? f.n1 : f.n2;
    int L = haxis == 1 ? L1 : L2;
    for (int lev = 0; lev < L; ++lev)
      for (int k = 0; k < (1 << lev); ++k) {
        DyadicCube Q{haxis, lev, k};
        auto h = haar(HaarIndex{Q, 1}, n);
        auto coeff = pairing_axis(f, h, haxis);           // one-parameter in the other variable
        auto m = maximal_axis(coeff, 1, 1.0);             // dyadic maximal on that axis
        Interval I = Q.interval(n);
        double w = 1.0 / I.ell();
        for (int t = 0; t < I.len; ++t) {
          int i = I.cell(t);
          for (int j = 0; j < (haxis == 1 ? f.n2 : f.n1); ++j) {
            double mv = m.v[j];
            if (haxis == 1)
              out.at(i, j) += w * mv * mv;
            else
              out.at(j, i) += w * mv * mv;
          }
        }
      }
  }
  for (auto& x : out.v) x = std::sqrt(std::max(x, 0.0));
  return out;
}

/// One-parameter dyadic square function.
inline GridFunction square_function1(const GridFunction& f) {
  if (f.params != 1 || f.comps != 1) throw std::invalid_argument("square_function1: scalar one-parameter input");
  int L = log2_exact(f.n1);
  auto out = GridFunction::zero1(f.n1);
  for (int lev = 0; lev < L; ++lev)
    for (int k = 0; k < (1 << lev); ++k) {
      auto d = martingale_delta(f, DyadicCube{1, lev, k});
      for (int i = 0; i < f.n1; ++i) out.v[i] += d.v[i] * d.v[i];
    }
  for (auto& x : out.v) x = std::sqrt(std::max(x, 0.0));
  return out;
}

// ---------------------------------------------------------------------------
// Sharp maximal functions.
// ---------------------------------------------------------------------------

namespace detail {
// Enumerate intervals of all dyadic side lengths on the base lattice and, when
// shifted==true, on the 1/3-translated lattice (rounded to the grid). The
// 1/3 shift makes the enumeration comparable to a sup over all intervals.
template <class F>
inline void for_each_interval(int n, bool shifted, F&& fn) {
  int L = log2_exact(n);
  int off = shifted ? (n / 3) : 0;
  for (int s = 0; s <= (shifted ? 1 : 0); ++s) {
    int shift = s == 0 ? 0 : off;
    if (s == 1 && shift == 0) continue;
    for (int lev = 0; lev <= L; ++lev) {
      int cells = n >> lev;
      for (int k = 0; k < (1 << lev); ++k) fn(Interval{(k * cells + shift) % n, cells, n});
    }
  }
}
}  // namespace detail

/// Scalar sharp maximal M^# b(x) = sup_{I in lattice(s), I ∍ x} fint_I |b - <b>_I|
/// for one-parameter b. `shifted` adds the 1/3-translated lattice.
inline GridFunction sharp_maximal(const GridFunction& b, bool shifted = true) {
  if (b.params != 1 || b.comps != 1) throw std::invalid_argument("sharp_maximal: scalar one-parameter input");
  auto out = GridFunction::zero1(b.n1);
  detail::for_each_interval(b.n1, shifted, [&](Interval I) {
    Accum mean;
    for (int t = 0; t < I.len; ++t) mean.add(b.v[I.cell(t)]);
    double m = mean.get() / I.len;
    Accum dev;
    for (int t = 0; t < I.len; ++t) dev.add(std::abs(b.v[I.cell(t)] - m));
    double osc = dev.get() / I.len;
    for (int t = 0; t < I.len; ++t) {
      int i = I.cell(t);
      out.v[i] = std::max(out.v[i], osc);
    }
  });
  return out;
}

/// Inner-norm sharp maximal for two-parameter g:
/// g#(x1) = sup_{I1 ∍ x1} fint_{I1} || g - <g>_{I1,1} ||_{L^{q2}_{x2}}.
inline GridFunction sharp_maximal_inner(const GridFunction& g, double q2, bool shifted = true) {
  if (g.params != 2 || g.comps != 1) throw std::invalid_argument("sharp_maximal_inner: two-parameter input");
  auto out = GridFunction::zero1(g.n1);
  std::vector<double> slice(g.n2);
  detail::for_each_interval(g.n1, shifted, [&](Interval I1) {
    auto m = rect_average_axis1(g, I1);
    Accum acc;
    for (int t = 0; t < I1.len; ++t) {
      int i1 = I1.cell(t);
      for (int i2 = 0; i2 < g.n2; ++i2) slice[i2] = g.at(i1, i2) - m.v[i2];
      acc.add(detail::lp_norm(std::span(slice), q2, 1.0 / g.n2));
    }
    double val = acc.get() / I1.len;
    for (int t = 0; t < I1.len; ++t) {
      int i = I1.cell(t);
      out.v[i] = std::max(out.v[i], val);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Sparse collections (one-parameter).
// ---------------------------------------------------------------------------

struct SparseCollection {
  std::vector<DyadicCube> cubes;
  std::vector<std::vector<int>> major_cells;  // E(S) as grid-cell lists, aligned with cubes
  double gamma = 0.5;
  int n = 0;  // grid resolution the cells refer to
};

struct SparseReport {
  bool pass = true;
  std::string violation;
};

/// Checks the three invariants exactly on grid cells: E(S) ⊆ S, pairwise
/// disjointness, |E(S)| >= gamma |S|. Failures are reported, not thrown.
inline SparseReport verify_sparse(const SparseCollection& S) {
  SparseReport rep;
  std::vector<char> taken(S.n, 0);
  for (std::size_t i = 0; i < S.cubes.size(); ++i) {
    Interval I = S.cubes[i].interval(S.n);
    const auto& E = S.major_cells[i];
    for (int cell : E) {
      if (!I.contains(cell)) return {false, "major-set cell outside its cube"};
      if (taken[cell]) return {false, "major sets overlap"};
      taken[cell] = 1;
    }
    if (double(E.size()) + 1e-12 < S.gamma * I.len) return {false, "major set smaller than gamma|S|"};
  }
  return rep;
}

struct LernerResult {
  SparseCollection collection;
  double c_dom = 0.0;  // measured pointwise-domination constant
};

namespace detail {
inline double local_mean_osc(const GridFunction& b, const Interval& I) {
  Accum mean;
  for (int t = 0; t < I.len; ++t) mean.add(b.v[I.cell(t)]);
  double m = mean.get() / I.len;
  Accum dev;
  for (int t = 0; t < I.len; ++t) dev.add(std::abs(b.v[I.cell(t)] - m));
  return dev.get() / I.len;
}
}  // namespace detail

/// Stopping-time construction of a gamma-sparse family S ⊆ D(Q0) with the
/// pointwise domination 1_{Q0}|b - <b>_{Q0}| <= C_dom * sum_S 1_S fint_S|b-<b>_S|.
/// Stopping cubes are the maximal descendants S' with
///   fint_{S'} |b - <b>_S| > (1/(1-gamma)) fint_S |b - <b>_S|,
/// so Chebyshev gives sum|S'| <= (1-gamma)|S| and E(S) = S \ U S' is a gamma
/// major set. The threshold factor is 2 at gamma = 1/2.
inline LernerResult lerner_sparse(const GridFunction& b, const DyadicCube& Q0, double gamma = 0.5) {
  if (b.params != 1 || b.comps != 1) throw std::invalid_argument("lerner_sparse: scalar one-parameter input");
  if (!(gamma > 0.0 && gamma <= 0.5)) throw std::invalid_argument("lerner_sparse: gamma in (0, 1/2]");
  int n = b.n1;
  int L = log2_exact(n);
  double thresh_factor = 1.0 / (1.0 - gamma);  // = 2 for gamma = 1/2

  LernerResult res;
  res.collection.gamma = gamma;
  res.collection.n = n;

  std::vector<DyadicCube> stack{Q0};
  int depth_budget = 4 * (L + 1) * n;  // generous; recursion is finite anyway
  while (!stack.empty()) {
    if (--depth_budget < 0) throw std::runtime_error("budget error: lerner_sparse recursion budget exhausted");
    DyadicCube S = stack.back();
    stack.pop_back();
    Interval IS = S.interval(n);
    double meanS;
    {
      Accum a;
      for (int t = 0; t < IS.len; ++t) a.add(b.v[IS.cell(t)]);
      meanS = a.get() / IS.len;
    }
    Accum oa;
    for (int t = 0; t < IS.len; ++t) oa.add(std::abs(b.v[IS.cell(t)] - meanS));
    double oscS = oa.get() / IS.len;
    auto parent_osc = [&](const Interval& IP) {
      Accum a;
      for (int t = 0; t < IP.len; ++t) a.add(std::abs(b.v[IP.cell(t)] - meanS));
      return a.get() / IP.len;
    };
    // maximal strict descendants whose parent-centered oscillation exceeds the threshold
    std::vector<DyadicCube> stops;
    std::vector<DyadicCube> frontier;
    if ((n >> S.level) >= 2) {
      frontier.push_back(DyadicCube{S.axis, S.level + 1, 2 * S.k});
      frontier.push_back(DyadicCube{S.axis, S.level + 1, 2 * S.k + 1});
    }
    std::vector<int> E_cells;
    while (!frontier.empty()) {
      DyadicCube P = frontier.back();
      frontier.pop_back();
      Interval IP = P.interval(n);
      if (oscS > 0 && parent_osc(IP) > thresh_factor * oscS) {
        stops.push_back(P);
        continue;
      }
      if ((n >> P.level) >= 2) {
        frontier.push_back(DyadicCube{P.axis, P.level + 1, 2 * P.k});
        frontier.push_back(DyadicCube{P.axis, P.level + 1, 2 * P.k + 1});
      }
    }
    // E(S) = S minus the stopping cubes.
    std::vector<char> stopped(IS.len, 0);
    for (const auto& P : stops) {
      Interval IP = P.interval(n);
      int off = ((IP.start - IS.start) % n + n) % n;
      for (int t = 0; t < IP.len; ++t) stopped[off + t] = 1;
    }
    for (int t = 0; t < IS.len; ++t)
      if (!stopped[t]) E_cells.push_back(IS.cell(t));
    res.collection.cubes.push_back(S);
    res.collection.major_cells.push_back(std::move(E_cells));
    for (const auto& P : stops) stack.push_back(P);
  }

  // Measured pointwise-domination constant over Q0.
  Interval I0 = Q0.interval(n);
  double m0;
  {
    Accum a;
    for (int t = 0; t < I0.len; ++t) a.add(b.v[I0.cell(t)]);
    m0 = a.get() / I0.len;
  }
  std::vector<double> dom(n, 0.0);
  for (std::size_t i = 0; i < res.collection.cubes.size(); ++i) {
    Interval IS = res.collection.cubes[i].interval(n);
    double osc = detail::local_mean_osc(b, IS);
    for (int t = 0; t < IS.len; ++t) dom[IS.cell(t)] += osc;
  }
  double c = 0;
  for (int t = 0; t < I0.len; ++t) {
    int cell = I0.cell(t);
    double lhs = std::abs(b.v[cell] - m0);
    if (lhs <= 1e-300) continue;
    if (dom[cell] <= 0) {
      c = std::numeric_limits<double>::infinity();
      break;
    }
    c = std::max(c, lhs / dom[cell]);
  }
  res.c_dom = c;
  return res;
}

}  // namespace bicomm
