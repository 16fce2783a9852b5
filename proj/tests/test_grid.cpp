#include <catch2/catch_amalgamated.hpp>

#include "bicomm/grid.hpp"
#include "bicomm/symbols.hpp"

using namespace bicomm;

namespace {
GridFunction indicator2(int n1, int n2, const Rect& R) {
  auto f = GridFunction::zero2(n1, n2);
  for (int t1 = 0; t1 < R.a1.len; ++t1)
    for (int t2 = 0; t2 < R.a2.len; ++t2) f.at(R.a1.cell(t1), R.a2.cell(t2)) = 1.0;
  return f;
}
}  // namespace

TEST_CASE("mixed norm on closed forms") {
  const int n = 64;
  SECTION("constant is 1 for every exponent pair") {
    auto f = GridFunction::constant2(n, n, 1.0);
    for (double s1 : {1.0, 2.0, 3.0})
      for (double s2 : {1.5, 2.0, 4.0}) CHECK(mixed_norm(f, s1, s2) == Catch::Approx(1.0).margin(1e-13));
  }
  SECTION("half-plane indicator, (2,3)") {
    auto f = indicator2(n, n, Rect{Interval{0, n / 2, n}, Interval{0, n, n}});
    CHECK(mixed_norm(f, 2.0, 3.0) == Catch::Approx(std::sqrt(0.5)).epsilon(1e-12));
  }
  SECTION("sine has L2 norm 1/sqrt(2)") {
    auto f = GridFunction::zero2(n, n);
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) f.at(i1, i2) = std::sin(2 * M_PI * f.x1(i1));
    CHECK(mixed_norm(f, 2.0, 2.0) == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-6));
  }
  SECTION("non-finite input rejected") {
    auto f = GridFunction::constant2(8, 8, 1.0);
    f.at(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(mixed_norm(f, 2, 2), std::invalid_argument);
  }
}

TEST_CASE("rect averages") {
  const int n = 64;
  SECTION("constant") {
    auto f = GridFunction::constant2(n, n, 2.5);
    CHECK(rect_average(f, Rect{Interval{3, 8, n}, Interval{1, 16, n}}) == Catch::Approx(2.5));
  }
  SECTION("x1*x2 over the full square is 1/4 (midpoint-exact)") {
    auto f = GridFunction::zero2(n, n);
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) f.at(i1, i2) = f.x1(i1) * f.x2(i2);
    CHECK(rect_average(f, full_rect(n, n)) == Catch::Approx(0.25).margin(1e-13));
  }
  SECTION("axis-1 partial average of x1 over [0,1/2) is the constant 1/4") {
    auto f = GridFunction::zero2(n, n);
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) f.at(i1, i2) = f.x1(i1);
    auto m = rect_average_axis1(f, Interval{0, n / 2, n});
    for (int i2 = 0; i2 < n; ++i2) CHECK(m.v[i2] == Catch::Approx(0.25).margin(1e-13));
  }
  SECTION("full-torus average equals pairing with one") {
    auto f = symbols::random2(n, n, 42);
    CHECK(rect_average(f, full_rect(n, n)) ==
          Catch::Approx(pairing(f, GridFunction::constant2(n, n, 1.0))).margin(1e-14));
  }
}

TEST_CASE("pairings") {
  const int n = 64;
  SECTION("unit Haar self-pairing") {
    auto h = GridFunction::zero1(n);
    for (int i = 0; i < n; ++i) h.v[i] = i < n / 2 ? 1.0 : -1.0;
    auto h2 = GridFunction::zero2(n, n);
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) h2.at(i1, i2) = h.v[i1];
    CHECK(pairing(h2, h2) == Catch::Approx(1.0).margin(1e-13));
  }
  SECTION("overlapping indicators") {
    auto f = GridFunction::zero1(n);
    auto g = GridFunction::zero1(n);
    for (int i = 0; i < n / 2; ++i) f.v[i] = 1.0;
    for (int i = n / 4; i < 3 * n / 4; ++i) g.v[i] = 1.0;
    CHECK(pairing(f, g) == Catch::Approx(0.25).margin(1e-14));
  }
  SECTION("axis pairing of x1*x2 against one") {
    auto f = GridFunction::zero2(n, n);
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) f.at(i1, i2) = f.x1(i1) * f.x2(i2);
    auto one = GridFunction::constant1(n, 1.0);
    auto out = pairing_axis(f, one, 1);
    for (int i2 = 0; i2 < n; ++i2) CHECK(out.v[i2] == Catch::Approx(0.5 * f.x2(i2)).margin(1e-13));
  }
  SECTION("grid mismatch throws") {
    auto f = GridFunction::constant2(16, 16, 1.0);
    auto g = GridFunction::constant2(32, 32, 1.0);
    CHECK_THROWS_AS(pairing(f, g), std::invalid_argument);
  }
}

TEST_CASE("duality map is the norming function") {
  const int n = 32;
  SECTION("constant is self-dual at (2,2)") {
    auto f = GridFunction::constant2(n, n, 1.0);
    auto g = duality_map(f, 2, 2);
    for (double x : g.v) CHECK(x == Catch::Approx(1.0).margin(1e-13));
  }
  SECTION("indicator normalizes to sqrt(2)") {
    auto f = GridFunction::zero2(n, n);
    for (int i1 = 0; i1 < n / 2; ++i1)
      for (int i2 = 0; i2 < n; ++i2) f.at(i1, i2) = 1.0;
    auto g = duality_map(f, 2, 2);
    CHECK(g.at(0, 0) == Catch::Approx(std::sqrt(2.0)).margin(1e-12));
    CHECK(g.at(n / 2, 0) == Catch::Approx(0.0).margin(1e-13));
  }
  SECTION("pairing recovers the norm on random inputs and exponents") {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
      auto f = symbols::random2(16, 16, 100 + t);
      double s1 = 1.2 + 2.5 * rng.uniform(), s2 = 1.2 + 2.5 * rng.uniform();
      auto g = duality_map(f, s1, s2);
      CHECK(relerr(pairing(f, g), mixed_norm(f, s1, s2)) < 1e-10);
      CHECK(relerr(mixed_norm(g, conj_exp(s1), conj_exp(s2)), 1.0) < 1e-10);
    }
  }
  SECTION("zero input throws degenerate-input") {
    CHECK_THROWS_AS(duality_map(GridFunction::zero2(8, 8), 2, 2), std::domain_error);
  }
}

TEST_CASE("Hoelder duality inequality with equality via the duality map") {
  Rng rng(99);
  for (int t = 0; t < 30; ++t) {
    auto f = symbols::random2(16, 16, 500 + t);
    auto g = symbols::random2(16, 16, 900 + t);
    double s1 = 1.3 + 2.0 * rng.uniform(), s2 = 1.3 + 2.0 * rng.uniform();
    double lhs = std::abs(pairing(f, g));
    double rhs = mixed_norm(f, s1, s2) * mixed_norm(g, conj_exp(s1), conj_exp(s2));
    CHECK(lhs <= rhs * (1 + 1e-12));
  }
}

TEST_CASE("mixed norm is a norm") {
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    auto f = symbols::random2(16, 16, 2000 + t);
    auto g = symbols::random2(16, 16, 3000 + t);
    double s1 = 1.0 + 3.0 * rng.uniform(), s2 = 1.0 + 3.0 * rng.uniform();
    double c = rng.uniform(-3, 3);
    auto cf = f;
    cf *= c;
    CHECK(relerr(mixed_norm(cf, s1, s2), std::abs(c) * mixed_norm(f, s1, s2)) < 1e-12);
    auto sum = f + g;
    CHECK(mixed_norm(sum, s1, s2) <= mixed_norm(f, s1, s2) + mixed_norm(g, s1, s2) + 1e-12);
  }
}

TEST_CASE("grid refinement changes fixed-symbol norms at first order") {
  // measured log-log slope of |norm(N) - norm(2N)| should be <= -0.9; the
  // symbol has a cusp so the midpoint rule cannot superconverge
  std::vector<double> norms;
  std::vector<int> Ns{64, 128, 256, 512};
  for (int n : Ns) {
    auto f = GridFunction::zero2(n, 4);
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < 4; ++i2) f.at(i1, i2) = std::sqrt(torus_dist(f.x1(i1), 0.0));
    norms.push_back(mixed_norm(f, 3.0, 2.0));
  }
  // Richardson-style: successive differences shrink ~ N^{-2} for a smooth
  // symbol under the midpoint rule; assert at least first order
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i + 1 < norms.size(); ++i) {
    double d = std::abs(norms[i] - norms[i + 1]);
    REQUIRE(d > 0);
    double x = std::log2(double(Ns[i])), y = std::log2(d);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  CHECK(slope <= -0.9);
}

TEST_CASE("symbol library") {
  const int n = 64;
  SECTION("constant") {
    symbols::SymbolParams p;
    p.num["c"] = 3.0;
    auto b = symbols::make("constant", p, n, n);
    CHECK(b.at(3, 5) == 3.0);
  }
  SECTION("tensor_holder formula") {
    auto b = symbols::tensor_holder(n, n, 0.5, 0.5);
    for (int i1 : {0, 7, 31})
      for (int i2 : {2, 60}) {
        double want = std::sqrt(torus_dist((i1 + 0.5) / n, 0.5)) * std::sqrt(torus_dist((i2 + 0.5) / n, 0.5));
        CHECK(b.at(i1, i2) == Catch::Approx(want).margin(1e-14));
      }
  }
  SECTION("depends_on_x1_only formula and x2-independence") {
    auto b = symbols::depends_on_x1_only(n, n);
    for (int i1 : {0, 5, 63}) {
      double want = std::log(torus_dist((i1 + 0.5) / n, 0.0) + 1.0 / n);
      for (int i2 : {0, 31, 63}) CHECK(b.at(i1, i2) == Catch::Approx(want).margin(1e-14));
    }
  }
  SECTION("unknown name raises configuration error") {
    CHECK_THROWS_AS(symbols::make("nope", {}, n, n), std::invalid_argument);
  }
  SECTION("haar synthesis refines consistently: dyadic averages are N-stable") {
    auto b64 = symbols::haar_synthesis2(64, 64, 5, 0.25, 0.25);
    auto b128 = symbols::haar_synthesis2(128, 128, 5, 0.25, 0.25);
    // the finer grid only adds cancellative detail below the shared levels,
    // so averages over the same dyadic rectangle agree exactly
    Rect R64{Interval{0, 16, 64}, Interval{16, 16, 64}};
    Rect R128{Interval{0, 32, 128}, Interval{32, 32, 128}};
    CHECK(rect_average(b64, R64) == Catch::Approx(rect_average(b128, R128)).margin(1e-12));
  }
}
