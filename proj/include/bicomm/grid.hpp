#pragma once

#include <optional>
#include <span>

#include "bicomm/core.hpp"

namespace bicomm {

/// Real function sampled at cell midpoints (k+1/2)/N of the unit torus, one
/// axis (params==1, n2==1) or two axes. `comps` > 1 stores a small sequence-
/// lattice value per grid point, laid out innermost.
struct GridFunction {
  int n1 = 1, n2 = 1;
  int params = 1;
  int comps = 1;
  std::vector<double> v;

  GridFunction() = default;
  static GridFunction zero1(int n1, int comps = 1) {
    check_res(n1);
    GridFunction f;
    f.n1 = n1;
    f.n2 = 1;
    f.params = 1;
    f.comps = comps;
    f.v.assign(std::size_t(n1) * comps, 0.0);
    return f;
  }
  static GridFunction zero2(int n1, int n2, int comps = 1) {
    check_res(n1);
    check_res(n2);
    GridFunction f;
    f.n1 = n1;
    f.n2 = n2;
    f.params = 2;
    f.comps = comps;
    f.v.assign(std::size_t(n1) * n2 * comps, 0.0);
    return f;
  }
  static GridFunction constant1(int n1, double c) {
    auto f = zero1(n1);
    for (auto& x : f.v) x = c;
    return f;
  }
  static GridFunction constant2(int n1, int n2, double c) {
    auto f = zero2(n1, n2);
    for (auto& x : f.v) x = c;
    return f;
  }

  double x1(int i) const { return (i + 0.5) / n1; }
  double x2(int i) const { return (i + 0.5) / n2; }

  double& at(int i1, int i2 = 0, int c = 0) { return v[(std::size_t(i1) * n2 + i2) * comps + c]; }
  double at(int i1, int i2 = 0, int c = 0) const { return v[(std::size_t(i1) * n2 + i2) * comps + c]; }

  std::size_t size() const { return v.size(); }

  bool same_grid(const GridFunction& o) const {
    return n1 == o.n1 && n2 == o.n2 && params == o.params && comps == o.comps;
  }

  void check_finite(const char* who) const {
    for (double x : v)
      if (!std::isfinite(x)) throw std::invalid_argument(std::string(who) + ": non-finite sample");
  }

  GridFunction& operator+=(const GridFunction& o) { return zip(o, [](double a, double b) { return a + b; }); }
  GridFunction& operator-=(const GridFunction& o) { return zip(o, [](double a, double b) { return a - b; }); }
  GridFunction& operator*=(double s) {
    for (auto& x : v) x *= s;
    return *this;
  }
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

  double max_abs() const {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  static void check_res(int n) {
    if (!is_pow2(n)) throw std::invalid_argument("resolution: grid size must be a power of two");
  }
  template <class F>
  GridFunction& zip(const GridFunction& o, F f) {
    if (!same_grid(o)) throw std::invalid_argument("alignment error: grid mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(v[i], o.v[i]);
    return *this;
  }
};

/// Grid-aligned periodic interval: cells [start, start+len) mod n.
struct Interval {
  int start = 0, len = 0, n = 1;
  double ell() const { return double(len) / n; }
  double center() const {
    double c = (start + 0.5 * len) / n;
    return c - std::floor(c);
  }
  int cell(int t) const { return (start + t) % n; }
  bool contains(int i) const {
    int d = i - start;
    d %= n;
    if (d < 0) d += n;
    return d < len;
  }
};

inline Interval full_interval(int n) { return Interval{0, n, n}; }

/// Grid-aligned axis-parallel rectangle on the two-parameter torus.
struct Rect {
  Interval a1, a2;
  double area() const { return a1.ell() * a2.ell(); }
  std::int64_t cells() const { return std::int64_t(a1.len) * a2.len; }
};

inline Rect full_rect(int n1, int n2) { return Rect{full_interval(n1), full_interval(n2)}; }

enum class Regime { LT, EQ, GT };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::LT: return "LT";
    case Regime::EQ: return "EQ";
    default: return "GT";
  }
}

/// Mixed-norm exponent data for one table cell; beta_i defined when p_i<q_i,
/// r_i when p_i>q_i (per-axis dimension is 1 here).
struct ExponentProfile {
  double p1 = 2, p2 = 2, q1 = 2, q2 = 2;

  ExponentProfile() = default;
  ExponentProfile(double P1, double P2, double Q1, double Q2) : p1(P1), p2(P2), q1(Q1), q2(Q2) {
    auto chk = [](double e) {
      if (!(e > 1.0) || !std::isfinite(e)) throw std::invalid_argument("exponent profile: exponents must lie in (1,inf)");
    };
    chk(p1);
    chk(p2);
    chk(q1);
    chk(q2);
  }
  Regime regime1() const { return reg(p1, q1); }
  Regime regime2() const { return reg(p2, q2); }
  double beta(int axis) const {
    double p = axis == 1 ? p1 : p2, q = axis == 1 ? q1 : q2;
    if (!(p < q)) throw std::logic_error("beta undefined unless p<q");
    return 1.0 / p - 1.0 / q;
  }
  double r(int axis) const {
    double p = axis == 1 ? p1 : p2, q = axis == 1 ? q1 : q2;
    if (!(p > q)) throw std::logic_error("r undefined unless p>q");
    return 1.0 / (1.0 / q - 1.0 / p);
  }
  std::string tag() const { return std::string(regime_name(regime1())) + "/" + regime_name(regime2()); }

 private:
  static Regime reg(double p, double q) { return p < q ? Regime::LT : (p > q ? Regime::GT : Regime::EQ); }
};

namespace detail {

// ||(xs)||_{L^s} with measure weight w per sample; s in [1, inf].
inline double lp_norm(std::span<const double> xs, double s, double w) {
  if (s == std::numeric_limits<double>::infinity()) {
    double m = 0;
    for (double x : xs) m = std::max(m, std::abs(x));
    return m;
  }
  Accum a;
  if (s == 1.0) {
    for (double x : xs) a.add(std::abs(x));
    return a.get() * w;
  }
  if (s == 2.0) {
    for (double x : xs) a.add(x * x);
    return std::sqrt(a.get() * w);
  }
  for (double x : xs) a.add(std::pow(std::abs(x), s));
  return std::pow(a.get() * w, 1.0 / s);
}

}  // namespace detail

/// Midpoint-rule mixed norm ||f||_{L^{s1}_{x1} L^{s2}_{x2}} (inner norm over
/// axis 2 first). For one-parameter f the s2 argument is ignored.
inline double mixed_norm(const GridFunction& f, double s1, double s2 = 2.0) {
  if (f.comps != 1) throw std::invalid_argument("mixed_norm: reduce lattice values first");
  auto chk = [](double s) {
    if (!(s >= 1.0)) throw std::invalid_argument("mixed_norm: exponents must lie in [1,inf]");
  };
  chk(s1);
  f.check_finite("mixed_norm");
  if (f.params == 1) return detail::lp_norm(std::span(f.v), s1, 1.0 / f.n1);
  chk(s2);
  std::vector<double> inner(f.n1);
  for (int i1 = 0; i1 < f.n1; ++i1)
    inner[i1] = detail::lp_norm(std::span(f.v).subspan(std::size_t(i1) * f.n2, f.n2), s2, 1.0 / f.n2);
  return detail::lp_norm(std::span(inner), s1, 1.0 / f.n1);
}

/// Mixed norm restricted to a rectangle (Lebesgue measure of the cells).
inline double mixed_norm_on(const GridFunction& f, const Rect& R, double s1, double s2) {
  if (f.params != 2) throw std::invalid_argument("mixed_norm_on: two-parameter input required");
  std::vector<double> slice(R.a2.len), inner(R.a1.len);
  for (int t1 = 0; t1 < R.a1.len; ++t1) {
    int i1 = R.a1.cell(t1);
    for (int t2 = 0; t2 < R.a2.len; ++t2) slice[t2] = f.at(i1, R.a2.cell(t2));
    inner[t1] = detail::lp_norm(std::span(slice), s2, 1.0 / f.n2);
  }
  return detail::lp_norm(std::span(inner), s1, 1.0 / f.n1);
}

/// <f, g> = int f g with quadrature weight 1/(N1 N2).
inline double pairing(const GridFunction& f, const GridFunction& g) {
  if (!f.same_grid(g)) throw std::invalid_argument("alignment error: pairing grid mismatch");
  Accum a;
  for (std::size_t i = 0; i < f.v.size(); ++i) a.add(f.v[i] * g.v[i]);
  return a.get() / (double(f.n1) * f.n2);
}

/// Partial pairing <f, h>_axis: h is one-parameter on the named axis, the
/// result is one-parameter on the other axis.
inline GridFunction pairing_axis(const GridFunction& f, const GridFunction& h, int axis) {
  if (f.params != 2 || h.params != 1 || f.comps != 1 || h.comps != 1)
    throw std::invalid_argument("pairing_axis: need two-parameter f and one-parameter h");
  if ((axis == 1 && h.n1 != f.n1) || (axis == 2 && h.n1 != f.n2) || (axis != 1 && axis != 2))
    throw std::invalid_argument("alignment error: pairing_axis grid mismatch");
  if (axis == 1) {
    auto out = GridFunction::zero1(f.n2);
    for (int i2 = 0; i2 < f.n2; ++i2) {
      Accum a;
      for (int i1 = 0; i1 < f.n1; ++i1) a.add(f.at(i1, i2) * h.v[i1]);
      out.v[i2] = a.get() / f.n1;
    }
    return out;
  }
  auto out = GridFunction::zero1(f.n1);
  for (int i1 = 0; i1 < f.n1; ++i1) {
    Accum a;
    for (int i2 = 0; i2 < f.n2; ++i2) a.add(f.at(i1, i2) * h.v[i2]);
    out.v[i1] = a.get() / f.n2;
  }
  return out;
}

/// <f>_R (mode full); per spec rect_average also exposes the one-variable
/// partial averages <f>_{I1,1} and <f>_{I2,2}.
inline double rect_average(const GridFunction& f, const Rect& R) {
  if (f.params != 2) throw std::invalid_argument("rect_average: two-parameter input required");
  Accum a;
  for (int t1 = 0; t1 < R.a1.len; ++t1)
    for (int t2 = 0; t2 < R.a2.len; ++t2) a.add(f.at(R.a1.cell(t1), R.a2.cell(t2)));
  return a.get() / double(R.cells());
}

inline double interval_average(const GridFunction& f, const Interval& I) {
  if (f.params != 1) throw std::invalid_argument("interval_average: one-parameter input required");
  if (I.n != f.n1) throw std::invalid_argument("alignment error: interval does not fit grid");
  Accum a;
  for (int t = 0; t < I.len; ++t) a.add(f.v[I.cell(t)]);
  return a.get() / I.len;
}

/// x2 |-> <f>_{I1,1}(x2), the average over I1 in the first variable.
inline GridFunction rect_average_axis1(const GridFunction& f, const Interval& I1) {
  if (f.params != 2 || I1.n != f.n1) throw std::invalid_argument("alignment error: rect_average_axis1");
  auto out = GridFunction::zero1(f.n2);
  for (int i2 = 0; i2 < f.n2; ++i2) {
    Accum a;
    for (int t = 0; t < I1.len; ++t) a.add(f.at(I1.cell(t), i2));
    out.v[i2] = a.get() / I1.len;
  }
  return out;
}

/// x1 |-> <f>_{I2,2}(x1).
inline GridFunction rect_average_axis2(const GridFunction& f, const Interval& I2) {
  if (f.params != 2 || I2.n != f.n2) throw std::invalid_argument("alignment error: rect_average_axis2");
  auto out = GridFunction::zero1(f.n1);
  for (int i1 = 0; i1 < f.n1; ++i1) {
    Accum a;
    for (int t = 0; t < I2.len; ++t) a.add(f.at(i1, I2.cell(t)));
    out.v[i1] = a.get() / I2.len;
  }
  return out;
}

/// Double-difference projection b - <b>_{I1,1} - <b>_{I2,2} + <b>_R, returned
/// on the full grid (zero outside R).
inline GridFunction osc_projection(const GridFunction& b, const Rect& R) {
  auto m1 = rect_average_axis1(b, R.a1);
  auto m2 = rect_average_axis2(b, R.a2);
  double mR = rect_average(b, R);
  auto out = GridFunction::zero2(b.n1, b.n2);
  for (int t1 = 0; t1 < R.a1.len; ++t1) {
    int i1 = R.a1.cell(t1);
    for (int t2 = 0; t2 < R.a2.len; ++t2) {
      int i2 = R.a2.cell(t2);
      out.at(i1, i2) = b.at(i1, i2) - m1.v[i2] - m2.v[i1] + mR;
    }
  }
  return out;
}

/// Norming function of the mixed norm: returns g with ||g||_{s1',s2'} = 1 and
/// <f,g> = ||f||_{s1,s2}; the pointwise power/sign construction with per-slice
/// rescaling. Requires s_i in (1,inf) and f != 0.
inline GridFunction duality_map(const GridFunction& f, double s1, double s2 = 2.0) {
  if (f.comps != 1) throw std::invalid_argument("duality_map: scalar input required");
  double nrm = mixed_norm(f, s1, s2);
  if (nrm <= 0) throw std::domain_error("degenerate-input error: duality_map of zero function");
  conj_exp(s1);
  if (f.params == 1) {
    auto g = GridFunction::zero1(f.n1);
    double denom = std::pow(nrm, s1 - 1.0);
    for (int i = 0; i < f.n1; ++i) {
      double x = f.v[i];
      g.v[i] = (x == 0 ? 0.0 : (x > 0 ? 1.0 : -1.0)) * std::pow(std::abs(x), s1 - 1.0) / denom;
    }
    return g;
  }
  conj_exp(s2);
  auto g = GridFunction::zero2(f.n1, f.n2);
  double denom = std::pow(nrm, s1 - 1.0);
  for (int i1 = 0; i1 < f.n1; ++i1) {
    std::vector<double> slice(f.n2);
    for (int i2 = 0; i2 < f.n2; ++i2) slice[i2] = f.at(i1, i2);
    double sn = detail::lp_norm(std::span(slice), s2, 1.0 / f.n2);
    if (sn == 0) continue;
    double fac = std::pow(sn, s1 - s2) / denom;
    for (int i2 = 0; i2 < f.n2; ++i2) {
      double x = slice[i2];
      g.at(i1, i2) = (x == 0 ? 0.0 : (x > 0 ? 1.0 : -1.0)) * std::pow(std::abs(x), s2 - 1.0) * fac;
    }
  }
  return g;
}

}  // namespace bicomm
