#pragma once

#include "bicomm/dyadic.hpp"
#include "bicomm/report.hpp"

namespace bicomm {

/// Weighted little-l^s sequence lattice of dimension M (the finite stand-in
/// for a function lattice; weights default to 1).
struct LatticeNorm {
  double s = 2.0;
  std::vector<double> w;  // size M; empty means all-ones
  double norm(std::span<const double> e) const {
    Accum a;
    for (std::size_t m = 0; m < e.size(); ++m) {
      double wm = w.empty() ? 1.0 : w[m];
      a.add(wm * std::pow(std::abs(e[m]), s));
    }
    return std::pow(a.get(), 1.0 / s);
  }
};

/// Pointwise lattice reduction |f|_X as a scalar GridFunction.
inline GridFunction lattice_reduce(const GridFunction& f, const LatticeNorm& X) {
  GridFunction out = f.params == 1 ? GridFunction::zero1(f.n1) : GridFunction::zero2(f.n1, f.n2);
  std::size_t pts = std::size_t(f.n1) * f.n2;
  for (std::size_t p = 0; p < pts; ++p)
    out.v[p] = X.norm(std::span(f.v).subspan(p * f.comps, f.comps));
  return out;
}

// ---------------------------------------------------------------------------
// Product paraproducts A^i_j and A_{j1,j2}.
// ---------------------------------------------------------------------------

/// One-parameter paraproduct A^axis_j(b, f) on the finite lattice (E terms
/// include the top-level average, so sum_j A^i_j = bf - <b>_i <f>_i exactly).
/// A scalar symbol broadcasts over the lattice components of f.
inline GridFunction paraproduct1(const GridFunction& b, const GridFunction& f, int axis, int j) {
  if (b.n1 != f.n1 || b.n2 != f.n2 || b.params != f.params || (b.comps != f.comps && b.comps != 1))
    throw std::invalid_argument("alignment error: paraproduct grids");
  if (j < 1 || j > 3) throw std::invalid_argument("paraproduct: index in {1,2,3}");
  MeanPyramid Pb(b), Pf(f);
  int L = axis == 1 ? Pb.L1 : Pb.L2;
  int Lo1 = Pb.L1, Lo2 = Pb.L2;
  GridFunction out = f.params == 1 ? GridFunction::zero1(f.n1, f.comps) : GridFunction::zero2(f.n1, f.n2, f.comps);
  if (f.params == 1 && axis != 1) throw std::invalid_argument("paraproduct1: one-parameter input lives on axis 1");
  for (int l = 0; l < L; ++l) {
    int bl1 = axis == 1 ? l : Lo1;
    int bl2 = axis == 1 ? Lo2 : l;
    for (int i1 = 0; i1 < f.n1; ++i1)
      for (int i2 = 0; i2 < f.n2; ++i2) {
        for (int c = 0; c < f.comps; ++c) {
          int cb = b.comps == 1 ? 0 : c;
          double Eb = Pb.E(bl1, bl2, i1, i2, cb);
          double Eb1 = Pb.E(axis == 1 ? l + 1 : Lo1, axis == 1 ? Lo2 : l + 1, i1, i2, cb);
          double Ef = Pf.E(bl1, bl2, i1, i2, c);
          double Ef1 = Pf.E(axis == 1 ? l + 1 : Lo1, axis == 1 ? Lo2 : l + 1, i1, i2, c);
          double db = Eb1 - Eb, df = Ef1 - Ef;
          double term = j == 1 ? db * df : (j == 2 ? db * Ef : Eb * df);
          out.v[(std::size_t(i1) * f.n2 + i2) * f.comps + c] += term;
        }
      }
  }
  return out;
}

/// Bi-parameter paraproduct A_{j1,j2}(b,f) (chained per-axis structure). A
/// scalar symbol broadcasts over the lattice components of f.
inline GridFunction paraproduct2(const GridFunction& b, const GridFunction& f, int j1, int j2) {
  if (b.n1 != f.n1 || b.n2 != f.n2 || b.params != 2 || f.params != 2 || (b.comps != f.comps && b.comps != 1))
    throw std::invalid_argument("alignment error: paraproduct2 grids");
  if (j1 < 1 || j1 > 3 || j2 < 1 || j2 > 3) throw std::invalid_argument("paraproduct2: indices in {1,2,3}");
  MeanPyramid Pb(b), Pf(f);
  auto out = GridFunction::zero2(f.n1, f.n2, f.comps);
  for (int l1 = 0; l1 < Pb.L1; ++l1)
    for (int l2 = 0; l2 < Pb.L2; ++l2)
      for (int i1 = 0; i1 < f.n1; ++i1)
        for (int i2 = 0; i2 < f.n2; ++i2)
          for (int c = 0; c < f.comps; ++c) {
            int cb = b.comps == 1 ? 0 : c;
            double b00 = Pb.E(l1, l2, i1, i2, cb), b10 = Pb.E(l1 + 1, l2, i1, i2, cb);
            double b01 = Pb.E(l1, l2 + 1, i1, i2, cb), b11 = Pb.E(l1 + 1, l2 + 1, i1, i2, cb);
            double f00 = Pf.E(l1, l2, i1, i2, c), f10 = Pf.E(l1 + 1, l2, i1, i2, c);
            double f01 = Pf.E(l1, l2 + 1, i1, i2, c), f11 = Pf.E(l1 + 1, l2 + 1, i1, i2, c);
            // per-axis D/E values: dd = D1D2 u, de = D1E2 u, ed = E1D2 u, ee = E1E2 u;
            // the b factor takes D on axis a unless j_a = 3, the f factor unless j_a = 2
            double bdd = b11 - b10 - b01 + b00, bde = b10 - b00, bed = b01 - b00, bee = b00;
            double fdd = f11 - f10 - f01 + f00, fde = f10 - f00, fed = f01 - f00, fee = f00;
            auto factor = [&](int ja, int jb, double dd, double de, double ed, double ee, bool bfac) {
              bool d1 = bfac ? (ja != 3) : (ja != 2);
              bool d2 = bfac ? (jb != 3) : (jb != 2);
              if (d1 && d2) return dd;
              if (d1 && !d2) return de;
              if (!d1 && d2) return ed;
              return ee;
            };
            double bv = factor(j1, j2, bdd, bde, bed, bee, true);
            double fv = factor(j1, j2, fdd, fde, fed, fee, false);
            out.v[(std::size_t(i1) * f.n2 + i2) * f.comps + c] += bv * fv;
          }
  return out;
}

// ---------------------------------------------------------------------------
// Dyadic model operators.
// ---------------------------------------------------------------------------

/// Dyadic shift of complexity (ci, cj) on one axis: coefficients a_{K,I,J}
/// over triples with I^{(ci)} = J^{(cj)} = K, normalized by
/// |a| <= |I|^{1/2} |J|^{1/2} / |K|.
struct DyadicShift {
  int axis = 1;
  int ci = 0, cj = 0;
  // per K-level tables: coeff[lk][ (k * 2^ci + di) * 2^cj + dj ]
  std::vector<std::vector<double>> coeff;
  int L = 0;  // grid depth it was built for

  static DyadicShift random(int axis, int ci, int cj, int n, std::uint64_t seed) {
    DyadicShift S;
    S.axis = axis;
    S.ci = ci;
    S.cj = cj;
    S.L = log2_exact(n);
    Rng rng(seed);
    int maxk = S.L - 1 - std::max(ci, cj);  // deepest K level with cancellative I, J
    S.coeff.resize(maxk + 1);
    for (int lk = 0; lk <= maxk; ++lk) {
      S.coeff[lk].assign(std::size_t(1 << lk) * (1 << ci) * (1 << cj), 0.0);
      for (auto& x : S.coeff[lk]) x = rng.uniform(-1.0, 1.0);
    }
    S.rescale_to_normalization();
    return S;
  }

  double bound(int lk) const {
    // |I| = 2^{-(lk+ci)}, |J| = 2^{-(lk+cj)}, |K| = 2^{-lk}
    return std::pow(2.0, -0.5 * (lk + ci) - 0.5 * (lk + cj) + lk);
  }

  void rescale_to_normalization() {
    double worst = 0;
    for (int lk = 0; lk < int(coeff.size()); ++lk)
      for (double x : coeff[lk]) worst = std::max(worst, std::abs(x) / bound(lk));
    if (worst > 0)
      for (auto& tab : coeff)
        for (auto& x : tab) x /= worst;
  }

  void check_normalization() const {
    for (int lk = 0; lk < int(coeff.size()); ++lk)
      for (double x : coeff[lk])
        if (std::abs(x) > bound(lk) * (1 + 1e-12))
          throw std::invalid_argument("invariant error: shift coefficient exceeds normalization");
  }
};

/// Dyadic paraproduct pi on one axis: pi f = sum_K a_K <f>_{K} h_K with the
/// BMO normalization sup_P (|P|^{-1} sum_{K subset P} a_K^2)^{1/2} <= 1.
struct DyadicParaproduct {
  int axis = 2;
  std::vector<std::vector<double>> coeff;  // [level][k], cancellative levels only
  int L = 0;

  static DyadicParaproduct random(int axis, int n, std::uint64_t seed) {
    DyadicParaproduct P;
    P.axis = axis;
    P.L = log2_exact(n);
    Rng rng(seed);
    P.coeff.resize(P.L);
    for (int l = 0; l < P.L; ++l) {
      P.coeff[l].assign(1 << l, 0.0);
      for (auto& x : P.coeff[l]) x = rng.uniform(-1.0, 1.0);
    }
    P.rescale_to_normalization();
    return P;
  }

  double bmo_of_table() const {
    // sup over dyadic P of (|P|^{-1} sum_{K subset P} a_K^2)^{1/2}
    double best = 0;
    for (int lp = 0; lp < L; ++lp)
      for (int kp = 0; kp < (1 << lp); ++kp) {
        Accum a;
        for (int l = lp; l < L; ++l) {
          int shift = l - lp;
          for (int k = kp << shift; k < ((kp + 1) << shift); ++k) a.add(coeff[l][k] * coeff[l][k]);
        }
        best = std::max(best, std::sqrt(a.get() * std::pow(2.0, lp)));
      }
    return best;
  }

  void rescale_to_normalization() {
    double b = bmo_of_table();
    if (b > 0)
      for (auto& lev : coeff)
        for (auto& x : lev) x /= b;
  }

  void check_normalization() const {
    if (bmo_of_table() > 1 + 1e-12)
      throw std::invalid_argument("invariant error: paraproduct table exceeds BMO normalization");
  }
};

/// Coefficient tables travel as JSON: {axis, complexity: [ci, cj], depth,
/// levels: [[...], ...]} for shifts, {axis, depth, levels} for paraproducts.
inline json shift_to_json(const DyadicShift& S) {
  json levels = json::array();
  for (const auto& lev : S.coeff) levels.push_back(lev);
  return json{{"kind", "shift"}, {"axis", S.axis}, {"complexity", {S.ci, S.cj}}, {"depth", S.L}, {"levels", levels}};
}

inline DyadicShift shift_from_json(const json& j) {
  DyadicShift S;
  S.axis = j.at("axis").get<int>();
  S.ci = j.at("complexity")[0].get<int>();
  S.cj = j.at("complexity")[1].get<int>();
  S.L = j.at("depth").get<int>();
  for (const auto& lev : j.at("levels")) S.coeff.push_back(lev.get<std::vector<double>>());
  S.check_normalization();
  return S;
}

inline json paraproduct_to_json(const DyadicParaproduct& P) {
  json levels = json::array();
  for (const auto& lev : P.coeff) levels.push_back(lev);
  return json{{"kind", "paraproduct"}, {"axis", P.axis}, {"depth", P.L}, {"levels", levels}};
}

inline DyadicParaproduct paraproduct_from_json(const json& j) {
  DyadicParaproduct P;
  P.axis = j.at("axis").get<int>();
  P.L = j.at("depth").get<int>();
  for (const auto& lev : j.at("levels")) P.coeff.push_back(lev.get<std::vector<double>>());
  P.check_normalization();
  return P;
}

/// S f = sum a_{K,I,J} h_J (x) <f, h_I>_axis.
inline GridFunction shift_apply(const DyadicShift& S, const GridFunction& f) {
  int n = grid_n(f, f.params == 1 ? 1 : S.axis);
  if ((1 << S.L) != n) throw std::invalid_argument("alignment error: shift built for another grid");
  S.check_normalization();
  MeanPyramid P(f);
  GridFunction out = f.params == 1 ? GridFunction::zero1(f.n1, f.comps) : GridFunction::zero2(f.n1, f.n2, f.comps);
  int other = f.params == 1 ? 1 : (S.axis == 1 ? f.n2 : f.n1);
  int L = S.L;
  auto haar_coeff_line = [&](int level, int k, int j_other, int c) {
    // <f, h_I>_axis at the other-variable index: (|I|^{1/2}/2)(mean_l - mean_r)
    double ml, mr;
    if (f.params == 1) {
      ml = P.E(level + 1, 0, (2 * k) << (L - level - 1), 0, c);
      mr = P.E(level + 1, 0, (2 * k + 1) << (L - level - 1), 0, c);
    } else if (S.axis == 1) {
      ml = P.E(level + 1, P.L2, (2 * k) << (L - level - 1), j_other, c);
      mr = P.E(level + 1, P.L2, (2 * k + 1) << (L - level - 1), j_other, c);
    } else {
      ml = P.E(P.L1, level + 1, j_other, (2 * k) << (L - level - 1), c);
      mr = P.E(P.L1, level + 1, j_other, (2 * k + 1) << (L - level - 1), c);
    }
    double sqrtI = std::pow(2.0, -0.5 * level);
    return 0.5 * sqrtI * (ml - mr);
  };
  for (int lk = 0; lk < int(S.coeff.size()); ++lk) {
    int li = lk + S.ci, lj = lk + S.cj;
    double hmagJ = std::pow(2.0, 0.5 * lj);  // |J|^{-1/2}
    int cellsJ = n >> lj;
    for (int kk = 0; kk < (1 << lk); ++kk)
      for (int di = 0; di < (1 << S.ci); ++di) {
        int ik = (kk << S.ci) + di;
        for (int dj = 0; dj < (1 << S.cj); ++dj) {
          double a = S.coeff[lk][(std::size_t(kk) * (1 << S.ci) + di) * (1 << S.cj) + dj];
          if (a == 0.0) continue;
          int jk = (kk << S.cj) + dj;
          for (int jo = 0; jo < other; ++jo)
            for (int c = 0; c < f.comps; ++c) {
              double q = haar_coeff_line(li, ik, jo, c);
              if (q == 0.0) continue;
              double val = a * q * hmagJ;
              int base = jk * cellsJ;
              for (int t = 0; t < cellsJ; ++t) {
                double sgn = t < cellsJ / 2 ? 1.0 : -1.0;
                int pos = base + t;
                std::size_t idx;
                if (f.params == 1)
                  idx = std::size_t(pos) * f.comps + c;
                else if (S.axis == 1)
                  idx = (std::size_t(pos) * f.n2 + jo) * f.comps + c;
                else
                  idx = (std::size_t(jo) * f.n2 + pos) * f.comps + c;
                out.v[idx] += sgn * val;
              }
            }
        }
      }
  }
  return out;
}

/// pi f = sum_K a_K <f>_{K,axis} (x) h_K.
inline GridFunction pi_apply(const DyadicParaproduct& Pi, const GridFunction& f) {
  int n = grid_n(f, f.params == 1 ? 1 : Pi.axis);
  if ((1 << Pi.L) != n) throw std::invalid_argument("alignment error: paraproduct built for another grid");
  Pi.check_normalization();
  MeanPyramid P(f);
  GridFunction out = f.params == 1 ? GridFunction::zero1(f.n1, f.comps) : GridFunction::zero2(f.n1, f.n2, f.comps);
  int other = f.params == 1 ? 1 : (Pi.axis == 1 ? f.n2 : f.n1);
  int L = Pi.L;
  for (int l = 0; l < L; ++l) {
    double hmag = std::pow(2.0, 0.5 * l);
    int cells = n >> l;
    for (int k = 0; k < (1 << l); ++k) {
      double a = Pi.coeff[l][k];
      if (a == 0.0) continue;
      for (int jo = 0; jo < other; ++jo)
        for (int c = 0; c < f.comps; ++c) {
          double mean;
          if (f.params == 1)
            mean = P.E(l, 0, k << (L - l), 0, c);
          else if (Pi.axis == 1)
            mean = P.E(l, P.L2, k << (L - l), jo, c);
          else
            mean = P.E(P.L1, l, jo, k << (L - l), c);
          double val = a * mean * hmag;
          int base = k * cells;
          for (int t = 0; t < cells; ++t) {
            double sgn = t < cells / 2 ? 1.0 : -1.0;
            int pos = base + t;
            std::size_t idx;
            if (f.params == 1)
              idx = std::size_t(pos) * f.comps + c;
            else if (Pi.axis == 1)
              idx = (std::size_t(pos) * f.n2 + jo) * f.comps + c;
            else
              idx = (std::size_t(jo) * f.n2 + pos) * f.comps + c;
            out.v[idx] += sgn * val;
          }
        }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model commutator and its expansion.
// ---------------------------------------------------------------------------

inline GridFunction pointwise_mult(const GridFunction& b, const GridFunction& f) {
  if (b.n1 != f.n1 || b.n2 != f.n2 || b.params != f.params)
    throw std::invalid_argument("alignment error: pointwise product grids");
  GridFunction out = f;
  if (b.comps == f.comps) {
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.v[i];
    return out;
  }
  if (b.comps != 1) throw std::invalid_argument("pointwise_mult: scalar-times-lattice only");
  std::size_t pts = std::size_t(f.n1) * f.n2;
  for (std::size_t p = 0; p < pts; ++p)
    for (int c = 0; c < f.comps; ++c) out.v[p * f.comps + c] *= b.v[p];
  return out;
}

/// [S1, [b, pi2]] f by direct composition.
inline GridFunction model_commutator(const GridFunction& b, const DyadicShift& S1, const DyadicParaproduct& Pi2,
                                     const GridFunction& f) {
  auto pif = pi_apply(Pi2, f);
  auto s1f = shift_apply(S1, f);
  auto t1 = shift_apply(S1, pointwise_mult(b, pif));
  auto t2 = pointwise_mult(b, pi_apply(Pi2, s1f));
  auto t3 = shift_apply(S1, pi_apply(Pi2, pointwise_mult(b, f)));
  auto t4 = pi_apply(Pi2, pointwise_mult(b, s1f));
  t1 -= t2;
  t1 -= t3;
  t1 += t4;
  return t1;
}

struct ExpansionTerm {
  std::string name;
  std::string group;  // "direct", "middle", "a33"
  GridFunction value;
};

/// Every named term of the commutator expansion
///   [S1,[b,pi2]]f = sum(direct) + sum(middle) + sum(a33),
/// an exact identity on the finite lattice (E terms include top averages and
/// both model operators annihilate the one-variable corrections).
inline std::vector<ExpansionTerm> expansion_terms(const GridFunction& b, const DyadicShift& S1,
                                                  const DyadicParaproduct& Pi2, const GridFunction& f) {
  std::vector<ExpansionTerm> terms;
  auto pif = pi_apply(Pi2, f);
  auto s1f = shift_apply(S1, f);
  auto pis1f = pi_apply(Pi2, s1f);
  auto add = [&](std::string name, std::string group, GridFunction g) {
    terms.push_back({std::move(name), std::move(group), std::move(g)});
  };
  for (int k1 = 1; k1 <= 3; ++k1)
    for (int k2 = 1; k2 <= 3; ++k2) {
      std::string group = (k1 <= 2 && k2 <= 2) ? "direct" : (k1 == 3 && k2 == 3) ? "a33" : "middle";
      add("S1(A_{" + std::to_string(k1) + "," + std::to_string(k2) + "}(b, pi2 f))", group,
          shift_apply(S1, paraproduct2(b, pif, k1, k2)));
      auto neg = paraproduct2(b, pis1f, k1, k2);
      neg *= -1.0;
      add("-A_{" + std::to_string(k1) + "," + std::to_string(k2) + "}(b, pi2 S1 f)", group, std::move(neg));
    }
  for (int k1 = 1; k1 <= 3; ++k1) {
    std::string group = k1 == 3 ? "a33" : "middle";
    add("pi2(A^1_" + std::to_string(k1) + "(b, S1 f))", group, pi_apply(Pi2, paraproduct1(b, s1f, 1, k1)));
    auto neg = shift_apply(S1, pi_apply(Pi2, paraproduct1(b, f, 1, k1)));
    neg *= -1.0;
    add("-S1 pi2(A^1_" + std::to_string(k1) + "(b, f))", group, std::move(neg));
  }
  return terms;
}

/// The telescoped closed form of the a33 group:
///   sum_{K2} a_{K2}/|K2| sum_{K1, I1, J1} sum_{I2 subset K2} a_{K1,I1,J1}
///     [ <<b,h_{I2}>_2>_{J1} - <<b,h_{I2}>_2>_{I1} ] <f, h_{I1} x h_{I2}>
///     h_{J1} x h_{K2}.
/// Brute-force over all index tuples; used as the oracle against the grouped
/// compositions at small N.
inline GridFunction a33_group_closed_form(const GridFunction& b, const DyadicShift& S1,
                                          const DyadicParaproduct& Pi2, const GridFunction& f) {
  if (S1.axis != 1 || Pi2.axis != 2) throw std::invalid_argument("a33_group_closed_form: S1 on axis 1, pi2 on axis 2");
  int n1 = f.n1, n2 = f.n2;
  auto out = GridFunction::zero2(n1, n2);
  int L2 = log2_exact(n2);
  for (int lK2 = 0; lK2 < L2; ++lK2)
    for (int kK2 = 0; kK2 < (1 << lK2); ++kK2) {
      double aK2 = Pi2.coeff[lK2][kK2];
      if (aK2 == 0.0) continue;
      double sizeK2 = std::pow(2.0, -lK2);
      auto hK2 = haar(HaarIndex{DyadicCube{2, lK2, kK2}, 1}, n2);
      for (int lk = 0; lk < int(S1.coeff.size()); ++lk) {
        int li = lk + S1.ci, lj = lk + S1.cj;
        for (int kk = 0; kk < (1 << lk); ++kk)
          for (int di = 0; di < (1 << S1.ci); ++di)
            for (int dj = 0; dj < (1 << S1.cj); ++dj) {
              double a = S1.coeff[lk][(std::size_t(kk) * (1 << S1.ci) + di) * (1 << S1.cj) + dj];
              if (a == 0.0) continue;
              DyadicCube I1{1, li, (kk << S1.ci) + di};
              DyadicCube J1{1, lj, (kk << S1.cj) + dj};
              auto hJ1 = haar(HaarIndex{J1, 1}, n1);
              Interval II1 = I1.interval(n1), IJ1 = J1.interval(n1);
              // I2 ranges over all cancellative dyadic cubes inside K2
              for (int lI2 = lK2; lI2 < L2; ++lI2)
                for (int kI2 = kK2 << (lI2 - lK2); kI2 < (kK2 + 1) << (lI2 - lK2); ++kI2) {
                  DyadicCube I2{2, lI2, kI2};
                  auto hI2 = haar(HaarIndex{I2, 1}, n2);
                  auto bh = pairing_axis(b, hI2, 2);  // <b, h_{I2}>_2 : function of x1
                  double avgJ1 = interval_average(bh, IJ1);
                  double avgI1 = interval_average(bh, II1);
                  double fc = haar_coeff2(f, DyadicRectangle{I1, I2});
                  double w = aK2 / sizeK2 * a * (avgJ1 - avgI1) * fc;
                  if (w == 0.0) continue;
                  for (int i1 = 0; i1 < n1; ++i1) {
                    if (hJ1.v[i1] == 0) continue;
                    for (int i2 = 0; i2 < n2; ++i2) out.at(i1, i2) += w * hJ1.v[i1] * hK2.v[i2];
                  }
                }
            }
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Product BMO pairing and paraproduct bound reports.
// ---------------------------------------------------------------------------

struct PairingReport {
  double ratio = 0;  // |<b,f>| / (prod_bmo(b) * ||S_D f||_1), 0/0 -> 0
  double numerator = 0, bmo = 0, sd1 = 0;
};

/// H1-BMO duality check |<b,f>| <= C prod_bmo(b) ||S_D f||_{L^1}. The product
/// BMO value is supplied by the caller (greedy-family estimate).
inline PairingReport h1_bmo_pairing(const GridFunction& b, const GridFunction& f, double prod_bmo_b) {
  PairingReport rep;
  rep.numerator = std::abs(pairing(b, f));
  rep.bmo = prod_bmo_b;
  rep.sd1 = mixed_norm(square_function(f, SquareVariant::SD), 1.0, 1.0);
  double denom = rep.bmo * rep.sd1;
  rep.ratio = denom > 1e-300 ? rep.numerator / denom : 0.0;
  return rep;
}

struct ParaBoundReport {
  double ratio = 0;  // ||A_{j1,j2}(b,f)||_{p1,p2,X3} / (prod_bmo(b;X1) ||f||_{p1,p2,X2})
  double lhs = 0, rhs = 0;
};

/// Lattice-valued (or scalar) paraproduct estimate check for j1, j2 in {1,2};
/// `bmo_b` is the X1-valued product BMO estimate of b computed by the caller.
inline ParaBoundReport paraproduct_bound_check(const GridFunction& b, const GridFunction& f, int j1, int j2,
                                               const ExponentProfile& prof, const LatticeNorm& X2,
                                               const LatticeNorm& X3, double bmo_b) {
  if (j1 > 2 || j2 > 2) throw std::invalid_argument("paraproduct_bound_check: j1, j2 in {1,2}");
  ParaBoundReport rep;
  auto A = paraproduct2(b, f, j1, j2);
  rep.lhs = mixed_norm(lattice_reduce(A, X3), prof.p1, prof.p2);
  rep.rhs = bmo_b * mixed_norm(lattice_reduce(f, X2), prof.p1, prof.p2);
  rep.ratio = rep.rhs > 1e-300 ? rep.lhs / rep.rhs : 0.0;
  return rep;
}

}  // namespace bicomm
