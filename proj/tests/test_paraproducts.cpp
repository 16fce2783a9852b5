#include <catch2/catch_amalgamated.hpp>

#include "bicomm/paraproducts.hpp"
#include "bicomm/spaces.hpp"
#include "bicomm/symbols.hpp"

using namespace bicomm;

TEST_CASE("product paraproducts") {
  const int n = 64;
  SECTION("disjoint Haar frequencies give zero diagonal term") {
    auto b = haar2(DyadicRectangle{DyadicCube{1, 1, 0}, DyadicCube{2, 1, 0}}, n, n);
    auto f = haar2(DyadicRectangle{DyadicCube{1, 2, 3}, DyadicCube{2, 2, 2}}, n, n);
    auto out = paraproduct2(b, f, 1, 1);
    CHECK(out.max_abs() < 1e-13);
  }
  SECTION("one-parameter collapse identity is exact") {
    for (int s = 0; s < 30; ++s) {
      auto b = symbols::random2(n, n, 100 + s), f = symbols::random2(n, n, 500 + s);
      GridFunction lhs = GridFunction::zero2(n, n);
      for (int j = 1; j <= 3; ++j) lhs += paraproduct1(b, f, 1, j);
      auto m1b = rect_average_axis1(b, full_interval(n));
      auto m1f = rect_average_axis1(f, full_interval(n));
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2) lhs.at(i1, i2) -= b.at(i1, i2) * f.at(i1, i2) - m1b.v[i2] * m1f.v[i2];
      CHECK(lhs.max_abs() < 1e-12 * std::max(1.0, b.max_abs() * f.max_abs()));
    }
  }
  SECTION("bi-parameter collapse identity with per-axis corrections") {
    for (int s = 0; s < 30; ++s) {
      auto b = symbols::random2(32, 32, 700 + s), f = symbols::random2(32, 32, 900 + s);
      GridFunction lhs = GridFunction::zero2(32, 32);
      for (int j1 = 1; j1 <= 3; ++j1)
        for (int j2 = 1; j2 <= 3; ++j2) lhs += paraproduct2(b, f, j1, j2);
      auto m1b = rect_average_axis1(b, full_interval(32)), m1f = rect_average_axis1(f, full_interval(32));
      auto m2b = rect_average_axis2(b, full_interval(32)), m2f = rect_average_axis2(f, full_interval(32));
      double mb = rect_average(b, full_rect(32, 32)), mf = rect_average(f, full_rect(32, 32));
      for (int i1 = 0; i1 < 32; ++i1)
        for (int i2 = 0; i2 < 32; ++i2)
          lhs.at(i1, i2) -= b.at(i1, i2) * f.at(i1, i2) - m1b.v[i2] * m1f.v[i2] - m2b.v[i1] * m2f.v[i1] + mb * mf;
      CHECK(lhs.max_abs() < 1e-12 * std::max(1.0, b.max_abs() * f.max_abs()));
    }
  }
  SECTION("collapse is exact on zero-per-axis-average symbols") {
    auto b = symbols::haar_synthesis2(32, 32, 5, 0.1, 0.1);  // cancellative by construction
    auto f = symbols::haar_synthesis2(32, 32, 7, 0.1, 0.1);
    GridFunction lhs = GridFunction::zero2(32, 32);
    for (int j1 = 1; j1 <= 3; ++j1)
      for (int j2 = 1; j2 <= 3; ++j2) lhs += paraproduct2(b, f, j1, j2);
    for (int i1 = 0; i1 < 32; ++i1)
      for (int i2 = 0; i2 < 32; ++i2) lhs.at(i1, i2) -= b.at(i1, i2) * f.at(i1, i2);
    CHECK(lhs.max_abs() < 1e-12 * std::max(1.0, b.max_abs() * f.max_abs()));
  }
}

TEST_CASE("dyadic shift") {
  const int n = 64;
  SECTION("complexity (0,0) with saturated diagonal reproduces f minus the top average") {
    DyadicShift S;
    S.axis = 1;
    S.ci = S.cj = 0;
    S.L = log2_exact(n);
    S.coeff.resize(S.L);
    for (int lk = 0; lk < S.L; ++lk) S.coeff[lk].assign(1 << lk, S.bound(lk));  // a_{K,K,K} = 1
    auto f = symbols::random1(n, 3);
    auto out = shift_apply(S, f);
    double mean = interval_average(f, full_interval(n));
    for (int i = 0; i < n; ++i) CHECK(out.v[i] == Catch::Approx(f.v[i] - mean).margin(1e-12));
  }
  SECTION("zero table maps to zero") {
    auto S = DyadicShift::random(1, 1, 1, n, 5);
    for (auto& lev : S.coeff)
      for (auto& x : lev) x = 0.0;
    CHECK(shift_apply(S, symbols::random1(n, 7)).max_abs() == 0.0);
  }
  SECTION("normalization violation is rejected at load") {
    auto S = DyadicShift::random(1, 1, 0, n, 9);
    S.coeff[0][0] = 10.0 * S.bound(0);
    CHECK_THROWS_AS(shift_apply(S, symbols::random1(n, 11)), std::invalid_argument);
  }
  SECTION("L2 bound sanity against the Cauchy-Schwarz oracle at N=16") {
    for (int s = 0; s < 10; ++s) {
      auto S = DyadicShift::random(1, 1, 1, 16, 100 + s);
      auto f = symbols::random1(16, 200 + s);
      double levels = double(S.coeff.size());
      CHECK(mixed_norm(shift_apply(S, f), 2.0) <= levels * mixed_norm(f, 2.0) + 1e-12);
    }
  }
}

TEST_CASE("dyadic paraproduct operator") {
  const int n = 64;
  SECTION("constant input reproduces the coefficient expansion") {
    auto P = DyadicParaproduct::random(1, n, 13);
    auto one = GridFunction::constant1(n, 1.0);
    auto out = pi_apply(P, one);
    // pi(1) = sum a_K h_K
    auto want = GridFunction::zero1(n);
    for (int l = 0; l < P.L; ++l)
      for (int k = 0; k < (1 << l); ++k) {
        auto h = haar(HaarIndex{DyadicCube{1, l, k}, 1}, n);
        h *= P.coeff[l][k];
        want += h;
      }
    out -= want;
    CHECK(out.max_abs() < 1e-12);
  }
  SECTION("single saturated coefficient") {
    DyadicParaproduct P;
    P.axis = 1;
    P.L = log2_exact(n);
    P.coeff.resize(P.L);
    for (int l = 0; l < P.L; ++l) P.coeff[l].assign(1 << l, 0.0);
    P.coeff[2][1] = std::pow(2.0, -1.0);  // |K0|^{1/2} at level 2
    CHECK(P.bmo_of_table() == Catch::Approx(1.0));
    auto f = symbols::random1(n, 17);
    auto out = pi_apply(P, f);
    Interval K0{16, 16, n};
    double mean = interval_average(f, K0);
    auto h = haar(HaarIndex{DyadicCube{1, 2, 1}, 1}, n);
    for (int i = 0; i < n; ++i) CHECK(out.v[i] == Catch::Approx(P.coeff[2][1] * mean * h.v[i]).margin(1e-12));
  }
  SECTION("L^p boundedness with fitted constant across random tables") {
    for (double p : {1.5, 2.0, 3.0}) {
      double worst = 0;
      for (int s = 0; s < 10; ++s) {
        auto P = DyadicParaproduct::random(1, n, 300 + s);
        auto f = symbols::random1(n, 400 + s);
        worst = std::max(worst, mixed_norm(pi_apply(P, f), p) / mixed_norm(f, p));
      }
      CHECK(worst <= 10.0);
    }
  }
}

TEST_CASE("model commutator long expansion") {
  const int n = 32;
  SECTION("constant symbol gives zero") {
    auto S1 = DyadicShift::random(1, 1, 1, n, 19);
    auto P2 = DyadicParaproduct::random(2, n, 23);
    auto f = symbols::random2(n, n, 29);
    auto out = model_commutator(GridFunction::constant2(n, n, 7.0), S1, P2, f);
    CHECK(out.max_abs() < 1e-12 * 7.0 * f.max_abs() * n);
  }
  SECTION("expansion identity on 30 random instances") {
    for (int s = 0; s < 30; ++s) {
      auto b = symbols::random2(n, n, 1000 + s);
      auto f = symbols::random2(n, n, 2000 + s);
      auto S1 = DyadicShift::random(1, 1 + s % 2, s % 3 == 0 ? 0 : 1, n, 3000 + s);
      auto P2 = DyadicParaproduct::random(2, n, 4000 + s);
      auto direct = model_commutator(b, S1, P2, f);
      auto terms = expansion_terms(b, S1, P2, f);
      REQUIRE(terms.size() == 24);
      GridFunction sum = GridFunction::zero2(n, n);
      for (const auto& t : terms) sum += t.value;
      sum -= direct;
      INFO("seed " << s);
      CHECK(sum.max_abs() <= 1e-10 * std::max(direct.max_abs(), 1e-300));
    }
  }
  SECTION("the A33 group matches its telescoped closed form at N=16") {
    const int m = 16;
    for (int s = 0; s < 5; ++s) {
      auto b = symbols::random2(m, m, 5000 + s);
      auto f = symbols::random2(m, m, 6000 + s);
      auto S1 = DyadicShift::random(1, 1, 1, m, 7000 + s);
      auto P2 = DyadicParaproduct::random(2, m, 8000 + s);
      auto terms = expansion_terms(b, S1, P2, f);
      GridFunction group = GridFunction::zero2(m, m);
      for (const auto& t : terms)
        if (t.group == "a33") group += t.value;
      auto closed = a33_group_closed_form(b, S1, P2, f);
      group -= closed;
      INFO("seed " << s);
      CHECK(group.max_abs() <= 1e-10 * std::max(closed.max_abs(), 1e-300));
    }
  }
  SECTION("model operators commute across axes") {
    auto S1 = DyadicShift::random(1, 1, 1, n, 31);
    auto P2 = DyadicParaproduct::random(2, n, 37);
    auto f = symbols::random2(n, n, 41);
    auto a = pi_apply(P2, shift_apply(S1, f));
    auto b = shift_apply(S1, pi_apply(P2, f));
    a -= b;
    CHECK(a.max_abs() < 1e-12 * std::max(1.0, f.max_abs()));
  }
}

TEST_CASE("H1-BMO pairing") {
  const int n = 32;
  SECTION("aligned single Haar at N=8 against the direct computation") {
    const int m = 8;
    DyadicRectangle R{DyadicCube{1, 1, 0}, DyadicCube{2, 1, 1}};
    auto b = haar2(R, m, m);
    // oracle quantities by hand: <b,b> = 1, ||S_D b||_1 = |R|^{1/2}, bmo via scan
    double sd1 = mixed_norm(square_function(b, SquareVariant::SD), 1, 1);
    CHECK(sd1 == Catch::Approx(0.5).margin(1e-12));  // |R| = 1/4
    double bmo = std::pow(0.25, -0.5);               // witness is R itself
    auto rep = h1_bmo_pairing(b, b, bmo);
    CHECK(rep.numerator == Catch::Approx(1.0).margin(1e-12));
    CHECK(rep.ratio == Catch::Approx(1.0 / (bmo * sd1)).epsilon(1e-12));
  }
  SECTION("orthogonal Haar frequencies give zero numerator") {
    auto b = haar2(DyadicRectangle{DyadicCube{1, 1, 0}, DyadicCube{2, 1, 0}}, n, n);
    auto f = haar2(DyadicRectangle{DyadicCube{1, 2, 1}, DyadicCube{2, 1, 0}}, n, n);
    CHECK(h1_bmo_pairing(b, f, 1.0).numerator < 1e-14);
  }
  SECTION("fitted duality ratio <= 10 over 50 random pairs") {
    double worst = 0;
    for (int s = 0; s < 50; ++s) {
      auto b = symbols::random2(n, n, 9000 + s);
      auto f = symbols::random2(n, n, 9500 + s);
      // cancellative part of f only (the pairing sees nothing else)
      auto fc = osc_projection(f, full_rect(n, n));
      double bmo = 0;
      // greedy product-BMO estimate is supplied by the caller in production;
      // here a rectangle-family scan suffices as the denominator
      {
        int L = log2_exact(n);
        for (int l1 = 0; l1 < L; ++l1)
          for (int k1 = 0; k1 < (1 << l1); ++k1)
            for (int l2 = 0; l2 < L; ++l2)
              for (int k2 = 0; k2 < (1 << l2); ++k2) {
                DyadicRectangle R{DyadicCube{1, l1, k1}, DyadicCube{2, l2, k2}};
                double c = haar_coeff2(b, R);
                bmo = std::max(bmo, std::abs(c) / std::sqrt(std::pow(2.0, -l1 - l2)));
              }
      }
      auto rep = h1_bmo_pairing(b, fc, bmo);
      worst = std::max(worst, rep.ratio);
    }
    CHECK(worst <= 10.0);
  }
}

TEST_CASE("lattice-valued machinery") {
  SECTION("compatible triple inequality holds pointwise") {
    // 1/s3 = 1/s1 + 1/s2 with (4, 4, 2)
    LatticeNorm X1{4.0, {}}, X2{4.0, {}}, X3{2.0, {}};
    Rng rng(55);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> e1(4), e2(4), prod(4);
      for (int m = 0; m < 4; ++m) {
        e1[m] = rng.uniform(-2, 2);
        e2[m] = rng.uniform(-2, 2);
        prod[m] = e1[m] * e2[m];
      }
      CHECK(X3.norm(prod) <= X1.norm(e1) * X2.norm(e2) + 1e-12);
    }
  }
  SECTION("exhaustive random-sign average is comparable to the square sum") {
    // n <= 12 terms, exhaustive 2^n sign patterns, lattice dimension 4
    LatticeNorm X{2.0, {}};
    Rng rng(66);
    const int terms = 8, M = 4;
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<std::vector<double>> e(terms, std::vector<double>(M));
      for (auto& v : e)
        for (auto& x : v) x = rng.uniform(-1, 1);
      Accum avg;
      for (int mask = 0; mask < (1 << terms); ++mask) {
        std::vector<double> sum(M, 0.0);
        for (int j = 0; j < terms; ++j) {
          double sgn = (mask >> j) & 1 ? 1.0 : -1.0;
          for (int m = 0; m < M; ++m) sum[m] += sgn * e[j][m];
        }
        double nm = X.norm(sum);
        avg.add(nm * nm);
      }
      double lhs = std::sqrt(avg.get() / (1 << terms));
      std::vector<double> sq(M, 0.0);
      for (int j = 0; j < terms; ++j)
        for (int m = 0; m < M; ++m) sq[m] += e[j][m] * e[j][m];
      for (auto& x : sq) x = std::sqrt(x);
      double rhs = X.norm(sq);
      CHECK(lhs <= 4.0 * rhs);
      CHECK(rhs <= 4.0 * lhs);
    }
  }
  SECTION("lattice Fefferman-Stein with fitted constant <= 10 at M <= 8") {
    const int n = 64, M = 4;
    Rng rng(77);
    double worst = 0;
    for (int trial = 0; trial < 3; ++trial) {
      // family of M lattice components treated as the vector index, s = 2
      auto f = GridFunction::zero2(n, n, M);
      for (auto& x : f.v) x = rng.uniform(-1, 1);
      // componentwise dyadic maximal
      auto mf = GridFunction::zero2(n, n, M);
      for (int m = 0; m < M; ++m) {
        auto comp = GridFunction::zero2(n, n);
        for (int i1 = 0; i1 < n; ++i1)
          for (int i2 = 0; i2 < n; ++i2) comp.at(i1, i2) = f.at(i1, i2, m);
        auto mc = maximal_rect(comp, 1.0);
        for (int i1 = 0; i1 < n; ++i1)
          for (int i2 = 0; i2 < n; ++i2) mf.at(i1, i2, m) = mc.at(i1, i2);
      }
      LatticeNorm X{2.0, {}};
      double lhs = mixed_norm(lattice_reduce(mf, X), 2.0, 2.0);
      double rhs = mixed_norm(lattice_reduce(f, X), 2.0, 2.0);
      worst = std::max(worst, lhs / rhs);
    }
    CHECK(worst <= 10.0);
  }
  SECTION("paraproduct estimate: scalar and lattice ratios bounded") {
    const int n = 32;
    ExponentProfile prof(2, 2, 2, 2);
    double worst_scalar = 0;
    for (int s = 0; s < 50; ++s) {
      auto b = symbols::haar_synthesis2(n, n, 10000 + s, 0.0, 0.0);
      auto f = symbols::random2(n, n, 11000 + s);
      double bmo = product_bmo_norm(b, ProductBmoFamily::Rectangles).value;
      for (int j1 = 1; j1 <= 2; ++j1)
        for (int j2 = 1; j2 <= 2; ++j2) {
          auto rep = paraproduct_bound_check(b, f, j1, j2, prof, LatticeNorm{2.0, {}}, LatticeNorm{2.0, {}}, bmo);
          worst_scalar = std::max(worst_scalar, rep.ratio);
        }
    }
    CHECK(worst_scalar <= 10.0);
    // lattice case M = 4, (s1, s2, s3) = (4, 4, 2)
    const int M = 4;
    Rng rng(88);
    double worst_lat = 0;
    for (int s = 0; s < 5; ++s) {
      auto b = symbols::haar_synthesis2(n, n, 12000 + s, 0.0, 0.0);
      auto f = GridFunction::zero2(n, n, M);
      for (auto& x : f.v) x = rng.uniform(-1, 1);
      double bmo = product_bmo_norm(b, ProductBmoFamily::Rectangles).value;
      auto rep = paraproduct_bound_check(b, f, 1, 2, prof, LatticeNorm{4.0, {}}, LatticeNorm{2.0, {}}, bmo);
      worst_lat = std::max(worst_lat, rep.ratio);
    }
    CHECK(worst_lat <= 20.0);
  }
}

TEST_CASE("coefficient tables round-trip through JSON") {
  const int n = 32;
  auto S = DyadicShift::random(1, 2, 1, n, 71);
  auto S2 = shift_from_json(shift_to_json(S));
  CHECK(S2.ci == S.ci);
  CHECK(S2.cj == S.cj);
  auto f = symbols::random2(n, n, 73);
  auto d = shift_apply(S, f) - shift_apply(S2, f);
  CHECK(d.max_abs() == 0.0);

  auto P = DyadicParaproduct::random(2, n, 79);
  auto P2 = paraproduct_from_json(paraproduct_to_json(P));
  auto dp = pi_apply(P, f) - pi_apply(P2, f);
  CHECK(dp.max_abs() == 0.0);

  SECTION("denormalized tables are rejected at load") {
    auto doc = shift_to_json(S);
    doc["levels"][0][0] = 100.0;
    CHECK_THROWS_AS(shift_from_json(doc), std::invalid_argument);
  }
}

TEST_CASE("lattice-valued model commutator keeps the expansion identity") {
  const int n = 16, M = 3;
  auto b = symbols::random2(n, n, 81);  // scalar symbol, broadcast over components
  Rng rng(83);
  auto f = GridFunction::zero2(n, n, M);
  for (auto& x : f.v) x = rng.uniform(-1, 1);
  auto S1 = DyadicShift::random(1, 1, 1, n, 85);
  auto P2 = DyadicParaproduct::random(2, n, 87);
  auto direct = model_commutator(b, S1, P2, f);
  auto terms = expansion_terms(b, S1, P2, f);
  GridFunction sum = GridFunction::zero2(n, n, M);
  for (const auto& t : terms) sum += t.value;
  sum -= direct;
  CHECK(sum.max_abs() <= 1e-11 * std::max(direct.max_abs(), 1e-300));
}
