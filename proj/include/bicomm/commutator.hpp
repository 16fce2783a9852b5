#pragma once

#include "bicomm/factorization.hpp"
#include "bicomm/symbols.hpp"

namespace bicomm {

/// Kernel-pairing route for <[T1,[b,T2]]f, g>: the quadruple sum
/// -sum B(x,y) K1 K2 f(y) g(x) / (N1 N2)^2 with the same near-diagonal
/// exclusion as the truncated operators, so the two routes agree exactly.
/// Cells where f (resp. g) vanish are skipped.
inline double kernel_pairing(const GridFunction& b, const GridFunction& f, const GridFunction& g,
                             const OperatorHandle& T1, const OperatorHandle& T2) {
  if (!b.same_grid(f) || !b.same_grid(g)) throw std::invalid_argument("alignment error: kernel_pairing grids");
  std::vector<int> ys, xs;
  for (int i1 = 0; i1 < f.n1; ++i1)
    for (int i2 = 0; i2 < f.n2; ++i2) {
      if (f.at(i1, i2) != 0.0) ys.push_back(i1 * f.n2 + i2);
      if (g.at(i1, i2) != 0.0) xs.push_back(i1 * f.n2 + i2);
    }
  double w = 1.0 / (double(f.n1) * f.n2);
  w *= w;
  int nchunk = std::min<int>(64, std::max<std::size_t>(1, xs.size()));
  std::vector<double> part(nchunk, 0.0);
  int per = int((xs.size() + nchunk - 1) / nchunk);
  parallel_for(nchunk, [&](int clo, int chi) {
    for (int c = clo; c < chi; ++c) {
      Accum acc;
      for (int t = c * per; t < std::min<int>(int(xs.size()), (c + 1) * per); ++t) {
        int x1 = xs[t] / f.n2, x2 = xs[t] % f.n2;
        double xc1 = (x1 + 0.5) / f.n1, xc2 = (x2 + 0.5) / f.n2;
        double gx = g.at(x1, x2);
        for (int yy : ys) {
          int y1 = yy / f.n2, y2 = yy % f.n2;
          double yc1 = (y1 + 0.5) / f.n1, yc2 = (y2 + 0.5) / f.n2;
          if (torus_dist(xc1, yc1) <= T1.eps + 1e-15 || torus_dist(xc2, yc2) <= T2.eps + 1e-15) continue;
          double B = b.at(x1, x2) - b.at(x1, y2) - b.at(y1, x2) + b.at(y1, y2);
          acc.add(B * kernel_eval(T1.kernel, xc1, yc1) * kernel_eval(T2.kernel, xc2, yc2) * f.at(y1, y2) * gx);
        }
      }
      part[c] = acc.get();
    }
  });
  Accum total;
  for (double p : part) total.add(p);
  return -total.get() * w;
}

/// Semi-kernel route: -int int K1(x1,y1) <[b(x1)-b(y1), T2] f(y1), g(x1)>_{x2},
/// requiring only the axis-1 separation. Same truncation conventions.
inline double one_param_pairing(const GridFunction& b, const GridFunction& f, const GridFunction& g,
                                const OperatorHandle& T1, const OperatorHandle& T2) {
  if (!b.same_grid(f) || !b.same_grid(g)) throw std::invalid_argument("alignment error: one_param_pairing grids");
  Accum total;
  for (int x1 = 0; x1 < f.n1; ++x1) {
    double xc1 = (x1 + 0.5) / f.n1;
    for (int y1 = 0; y1 < f.n1; ++y1) {
      if (torus_dist(xc1, (y1 + 0.5) / f.n1) <= T1.eps + 1e-15) continue;
      double k1 = kernel_eval(T1.kernel, xc1, (y1 + 0.5) / f.n1);
      // inner commutator pairing in x2 with the multiplier b(x1,.) - b(y1,.)
      Accum inner;
      for (int x2 = 0; x2 < f.n2; ++x2) {
        if (g.at(x1, x2) == 0.0) continue;
        double xc2 = (x2 + 0.5) / f.n2;
        Accum row;
        for (int y2 = 0; y2 < f.n2; ++y2) {
          if (f.at(y1, y2) == 0.0) continue;
          if (torus_dist(xc2, (y2 + 0.5) / f.n2) <= T2.eps + 1e-15) continue;
          double mult = (b.at(x1, x2) - b.at(y1, x2)) - (b.at(x1, y2) - b.at(y1, y2));
          row.add(kernel_eval(T2.kernel, xc2, (y2 + 0.5) / f.n2) * mult * f.at(y1, y2));
        }
        inner.add(row.get() * g.at(x1, x2) / f.n2);
      }
      total.add(k1 * inner.get());
    }
  }
  return -total.get() / (double(f.n1) * f.n1 * f.n2);
}

// ---------------------------------------------------------------------------
// Mixed-norm operator-norm lower bound (duality-map fixed point iteration).
// ---------------------------------------------------------------------------

struct LinearOp {
  int n1 = 0, n2 = 0;
  std::function<GridFunction(const GridFunction&)> forward;
  std::function<GridFunction(const GridFunction&)> transpose;
};

inline LinearOp bicommutator_op(const GridFunction& b, const OperatorHandle& T1, const OperatorHandle& T2) {
  LinearOp op;
  op.n1 = b.n1;
  op.n2 = b.n2;
  op.forward = [&b, &T1, &T2](const GridFunction& f) { return bicommutator_apply(b, T1, T2, f, false); };
  op.transpose = [&b, &T1, &T2](const GridFunction& g) { return bicommutator_apply(b, T1, T2, g, true); };
  return op;
}

struct BoydOptions {
  int starts = 6;  // 5 random + 1 structured (if provided)
  int iters = 200;
  double tol = 1e-8;
  std::uint64_t seed = 23;
  std::vector<GridFunction> structured_starts;
};

/// Certified lower bound of ||op||_{L^{p1}L^{p2} -> L^{q1}L^{q2}} by the
/// duality-map fixed-point iteration
///   f <- duality_map(op^T duality_map(op f, q), p1', p2'),
/// whose Rayleigh quotient ||op f||_q (with ||f||_p = 1) is non-decreasing.
inline NormReport mixed_norm_lower_bound(const LinearOp& op, const ExponentProfile& prof,
                                         const BoydOptions& opt = {}) {
  NormReport rep;
  rep.space = "operator_norm";
  rep.method = "duality_iteration";
  Rng rng(opt.seed);
  // linearity spot-check (contract of the black-box map)
  {
    auto u = GridFunction::zero2(op.n1, op.n2);
    auto w = GridFunction::zero2(op.n1, op.n2);
    Rng r2(opt.seed ^ 0x5bf03635ULL);
    for (auto& x : u.v) x = r2.uniform(-1, 1);
    for (auto& x : w.v) x = r2.uniform(-1, 1);
    auto lhs = op.forward(u + w);
    auto rhs = op.forward(u) + op.forward(w);
    double tol = 1e-8 * std::max(lhs.max_abs(), rhs.max_abs()) + 1e-12 * (u.max_abs() + w.max_abs());
    lhs -= rhs;
    if (lhs.max_abs() > tol) throw std::invalid_argument("contract error: operator is not linear");
  }
  double best = 0.0;
  std::vector<double> best_trace;
  bool monotone = true;
  int total_starts = opt.starts;
  for (int s = 0; s < total_starts; ++s) {
    GridFunction f;
    if (s < int(opt.structured_starts.size())) {
      f = opt.structured_starts[s];
    } else {
      f = GridFunction::zero2(op.n1, op.n2);
      for (auto& x : f.v) x = rng.sign();
    }
    double fn = mixed_norm(f, prof.p1, prof.p2);
    if (fn <= 0) continue;
    f *= 1.0 / fn;
    std::vector<double> trace;
    double prev = -1.0;
    for (int it = 0; it < opt.iters; ++it) {
      auto u = op.forward(f);
      double q = mixed_norm(u, prof.q1, prof.q2);
      trace.push_back(q);
      if (q <= 1e-300) break;
      if (prev >= 0 && q + 1e-12 * std::max(1.0, prev) < prev) monotone = false;
      if (prev >= 0 && std::abs(q - prev) <= opt.tol * std::max(q, 1e-300)) {
        prev = q;
        break;
      }
      prev = q;
      auto g = duality_map(u, prof.q1, prof.q2);
      auto w = op.transpose(g);
      if (w.max_abs() <= 0) break;
      f = duality_map(w, conj_exp(prof.p1), conj_exp(prof.p2));
    }
    double got = trace.empty() ? 0.0 : *std::max_element(trace.begin(), trace.end());
    if (got > best) {
      best = got;
      best_trace = trace;
    }
  }
  rep.value = best;
  rep.converged = monotone;
  rep.metadata = json{{"trace", best_trace}, {"starts", total_starts}, {"monotone", monotone}};
  return rep;
}

// ---------------------------------------------------------------------------
// Regime table.
// ---------------------------------------------------------------------------

enum class BoundDirection { TwoSided, UpperOnly, LowerFunctional };

struct RegimeRow {
  ExponentProfile prof;
  std::string space_name;
  double op_estimate = 0;
  double space_norm = 0;
  double ratio = 0;  // op / space when space > 0
  int n = 0;
  BoundDirection direction = BoundDirection::TwoSided;
  // second route for the split GT/LT cell
  std::string aux_space_name;
  double aux_space_norm = 0;
};

inline const char* direction_name(BoundDirection d) {
  switch (d) {
    case BoundDirection::TwoSided: return "two_sided";
    case BoundDirection::UpperOnly: return "upper_only";
    default: return "lower_functional";
  }
}

namespace detail {
// Outer dotted-L^r of slice-wise inner norms, centered at the axis-averaged
// slice (an upper estimate of the inf over X-valued constants).
template <class SliceNorm>
inline double outer_dotted(const GridFunction& b, double r_outer, int axis, SliceNorm&& inner) {
  int n = axis == 1 ? b.n1 : b.n2;
  int m = axis == 1 ? b.n2 : b.n1;
  auto center = GridFunction::zero1(m);
  for (int t = 0; t < m; ++t) {
    Accum a;
    for (int i = 0; i < n; ++i) a.add(axis == 1 ? b.at(i, t) : b.at(t, i));
    center.v[t] = a.get() / n;
  }
  auto vals = GridFunction::zero1(n);
  for (int i = 0; i < n; ++i) {
    auto g = GridFunction::zero1(m);
    for (int t = 0; t < m; ++t) g.v[t] = (axis == 1 ? b.at(i, t) : b.at(t, i)) - center.v[t];
    vals.v[i] = inner(g);
  }
  return mixed_norm(vals, r_outer);
}
}  // namespace detail

/// Space-norm estimate for one table cell; the mapping is the cell-for-cell
/// dispatch tested by the unit suite.
inline std::pair<std::string, double> regime_space_norm(const GridFunction& b, const ExponentProfile& prof) {
  Regime g1 = prof.regime1(), g2 = prof.regime2();
  if (g1 == Regime::LT && g2 == Regime::LT)
    return {"holder(beta1)(holder(beta2))",
            biparam_holder_norm(b, prof.beta(1), prof.beta(2), HolderMethod::Oscillatory).value};
  if (g1 == Regime::EQ && g2 == Regime::LT)
    return {"holder(beta2)_x2(bmo_x1)", holder_bmo_norm(b, prof.beta(2), 2, HolderMethod::Oscillatory).value};
  if (g1 == Regime::LT && g2 == Regime::EQ)
    return {"holder(beta1)_x1(bmo_x2)", holder_bmo_norm(b, prof.beta(1), 1, HolderMethod::Oscillatory).value};
  if (g1 == Regime::EQ && g2 == Regime::EQ)
    return {"product_bmo", product_bmo_norm(b, ProductBmoFamily::GreedyUnions).value};
  if (g1 == Regime::GT && g2 == Regime::LT)
    return {"dotted_lr1_x1(holder(beta2)_x2)",
            detail::outer_dotted(b, prof.r(1), 1, [&](const GridFunction& g) {
              return holder_norm(g, prof.beta(2), HolderMethod::Oscillatory).value;
            })};
  if (g1 == Regime::LT && g2 == Regime::GT)
    return {"holder(beta1)_x1(dotted_lr2)",
            holder_lr_norm(b, prof.beta(1), prof.r(2), HolderLrMethod::OscillatorySparse, 1).value};
  if (g1 == Regime::GT && g2 == Regime::EQ)
    return {"dotted_lr1_x1(bmo_x2)", detail::outer_dotted(b, prof.r(1), 1, [&](const GridFunction& g) {
              return detail::bmo_norm1(g);
            })};
  if (g1 == Regime::EQ && g2 == Regime::GT)
    return {"bmo_x1(dotted_lr2)", bmo_lr(b, prof.r(2), BmoLrKind::DirectNorm).value};
  return {"dotted_lr1(dotted_lr2)", lrlr(b, prof.r(1), prof.r(2), LrLrKind::DirectNorm).value};
}

/// Lower-route functional for the GT/LT cell: holder(beta2)_{x2}(dotted L^{r1}_{x1}).
inline double gtlt_lower_functional(const GridFunction& b, const ExponentProfile& prof) {
  return holder_lr_norm(b, prof.beta(2), prof.r(1), HolderLrMethod::OscillatorySparse, 2).value;
}

inline BoundDirection regime_direction(const ExponentProfile& prof) {
  Regime g1 = prof.regime1(), g2 = prof.regime2();
  bool two_sided = (g1 == Regime::LT && g2 == Regime::LT) || (g1 == Regime::EQ && g2 == Regime::LT) ||
                   (g1 == Regime::LT && g2 == Regime::EQ) || (g1 == Regime::LT && g2 == Regime::GT);
  if (two_sided) return BoundDirection::TwoSided;
  if (g1 == Regime::GT && g2 == Regime::LT) return BoundDirection::LowerFunctional;
  return BoundDirection::UpperOnly;
}

/// Runs the nine-cell table experiment for one symbol over the listed grids.
inline std::vector<RegimeRow> regime_table(const std::string& symbol_name, const symbols::SymbolParams& sym,
                                           const KernelSpec& K1, const KernelSpec& K2,
                                           const std::vector<ExponentProfile>& profiles, const std::vector<int>& Ns,
                                           const BoydOptions& boyd_base = {}) {
  std::vector<RegimeRow> rows;
  for (int n : Ns) {
    auto b = symbols::make(symbol_name, sym, n, n);
    auto T1 = OperatorHandle::bind(K1, n);
    auto T2 = OperatorHandle::bind(K2, n);
    for (const auto& prof : profiles) {
      RegimeRow row;
      row.prof = prof;
      row.n = n;
      row.direction = regime_direction(prof);
      auto [name, snorm] = regime_space_norm(b, prof);
      row.space_name = name;
      row.space_norm = snorm;
      if (row.direction == BoundDirection::LowerFunctional) {
        row.aux_space_name = "holder(beta2)_x2(dotted_lr1_x1)";
        row.aux_space_norm = gtlt_lower_functional(b, prof);
      }
      BoydOptions opt = boyd_base;
      opt.structured_starts.clear();
      // structured start: Haar atom on the strongest dyadic rectangle of b
      {
        int L = log2_exact(n);
        double bestc = -1;
        DyadicRectangle bestR;
        for (int l1 = 1; l1 < std::min(L, 5); ++l1)
          for (int l2 = 1; l2 < std::min(L, 5); ++l2)
            for (int k1 = 0; k1 < (1 << l1); ++k1)
              for (int k2 = 0; k2 < (1 << l2); ++k2) {
                DyadicRectangle R{DyadicCube{1, l1, k1}, DyadicCube{2, l2, k2}};
                double c = std::abs(haar_coeff2(b, R));
                if (c > bestc) {
                  bestc = c;
                  bestR = R;
                }
              }
        if (bestc > 0) opt.structured_starts.push_back(haar2(bestR, n, n));
      }
      auto op = bicommutator_op(b, T1, T2);
      row.op_estimate = mixed_norm_lower_bound(op, prof, opt).value;
      row.ratio = row.space_norm > 0 ? row.op_estimate / row.space_norm : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Default nine profiles covering all sign patterns: per-axis LT=(2,4),
/// EQ=(2,2), GT=(4,2).
inline std::vector<ExponentProfile> default_profiles() {
  std::vector<ExponentProfile> out;
  const double P[3][2] = {{2, 4}, {2, 2}, {4, 2}};  // LT, EQ, GT
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) out.emplace_back(P[a][0], P[c][0], P[a][1], P[c][1]);
  return out;
}

// ---------------------------------------------------------------------------
// Sharp-maximal estimate and the upper-bound suite.
// ---------------------------------------------------------------------------

struct SharpEstimateReport {
  double max_ratio = 0;  // pointwise LHS / majorant
  double bmo_lr_norm = 0;
};

/// Pointwise check of ([T1,[b,T2]]f)^sharp(x1) <=
///   C ||b||_{BMO_{x1}(L^{r2}.)} ( M_{1+eps}||T1 f||_{p2} + M_{1+eps}||f||_{p2} )(x1).
inline SharpEstimateReport sharp_estimate_check(const GridFunction& b, const OperatorHandle& T1,
                                                const OperatorHandle& T2, const GridFunction& f, double q2,
                                                double p2, double r2, double eps) {
  if (!(p2 > q2)) throw std::invalid_argument("sharp_estimate_check: p2 > q2 required");
  SharpEstimateReport rep;
  auto Cf = bicommutator_apply(b, T1, T2, f);
  auto lhs = sharp_maximal_inner(Cf, q2, true);
  auto T1f = apply(T1, f, false, 1);
  auto inner_norm = [&](const GridFunction& u) {
    auto out = GridFunction::zero1(u.n1);
    std::vector<double> slice(u.n2);
    for (int i1 = 0; i1 < u.n1; ++i1) {
      for (int i2 = 0; i2 < u.n2; ++i2) slice[i2] = u.at(i1, i2);
      out.v[i1] = detail::lp_norm(std::span(slice), p2, 1.0 / u.n2);
    }
    return out;
  };
  auto m1 = maximal_axis(inner_norm(T1f), 1, 1.0 + eps);
  auto m2 = maximal_axis(inner_norm(f), 1, 1.0 + eps);
  rep.bmo_lr_norm = bmo_lr(b, r2, BmoLrKind::DirectNorm).value;
  double best = 0;
  for (int i = 0; i < b.n1; ++i) {
    double denom = rep.bmo_lr_norm * (m1.v[i] + m2.v[i]);
    if (denom > 1e-14) best = std::max(best, lhs.v[i] / denom);
  }
  rep.max_ratio = best;
  return rep;
}

struct UpperBoundReport {
  double fractional_route_constant = 0;  // LT/LT: |<Cf,g>| / (space * <I_b1 I_b2 |f|, |g|>)
};

/// Numerical check of the fractional-integral route (LT/LT) and the
/// elementary one-parameter estimate.
inline UpperBoundReport upper_bound_suite(const GridFunction& b, const OperatorHandle& T1, const OperatorHandle& T2,
                                          const ExponentProfile& prof, std::uint64_t seed, int trials) {
  UpperBoundReport rep;
  Rng rng(seed);
  double space = biparam_holder_norm(b, prof.beta(1), prof.beta(2), HolderMethod::Oscillatory).value;
  for (int t = 0; t < trials; ++t) {
    auto f = GridFunction::zero2(b.n1, b.n2);
    auto g = GridFunction::zero2(b.n1, b.n2);
    for (auto& x : f.v) x = rng.uniform(-1, 1);
    for (auto& x : g.v) x = rng.uniform(-1, 1);
    double lhs = std::abs(pairing(bicommutator_apply(b, T1, T2, f), g));
    auto absf = f;
    for (auto& x : absf.v) x = std::abs(x);
    auto If = fractional_integral(fractional_integral(absf, prof.beta(1), 1), prof.beta(2), 2);
    auto absg = g;
    for (auto& x : absg.v) x = std::abs(x);
    double rhs = space * pairing(If, absg);
    if (rhs > 1e-14) rep.fractional_route_constant = std::max(rep.fractional_route_constant, lhs / rhs);
  }
  return rep;
}

/// One-parameter elementary estimate ||[b,T]f||_{L^q} <= C ||b||_{L^r.} ||f||_{L^p}.
inline double elementary_estimate_constant(const GridFunction& b1, const OperatorHandle& T, double p, double q,
                                           double r, std::uint64_t seed, int trials) {
  if (b1.params != 1) throw std::invalid_argument("elementary_estimate: one-parameter symbol");
  Rng rng(seed);
  double br = dotted_lr_norm(b1, r, DottedLrMethod::InfConst).value;
  double best = 0;
  for (int t = 0; t < trials; ++t) {
    auto f = GridFunction::zero1(b1.n1);
    for (auto& x : f.v) x = rng.uniform(-1, 1);
    auto bf = f;
    for (int i = 0; i < b1.n1; ++i) bf.v[i] *= b1.v[i];
    auto comm = apply(T, bf, false, 1);
    auto tf = apply(T, f, false, 1);
    for (int i = 0; i < b1.n1; ++i) comm.v[i] = b1.v[i] * tf.v[i] - comm.v[i];
    double lhs = mixed_norm(comm, q);
    double rhs = br * mixed_norm(f, p);
    if (rhs > 1e-14) best = std::max(best, lhs / rhs);
  }
  return best;
}

}  // namespace bicomm
