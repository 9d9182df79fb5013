#include <catch2/catch_amalgamated.hpp>

#include "qjacobi/qpoint.hpp"
#include "test_support.hpp"

using namespace qjacobi;
using qjtest::brute_force_g_distance2;
using qjtest::random_qpoint;
using qjtest::random_vec;

TEST_CASE("g_distance is permutation invariant") {
  QPoint t(2, 2), s(2, 2);
  t.set_sheet(0, {0, 0});
  t.set_sheet(1, {3, 4});
  s.set_sheet(0, {3, 4});
  s.set_sheet(1, {0, 0});
  REQUIRE(g_distance(t, s) == 0.0);
}

TEST_CASE("g_distance of a split pair") {
  QPoint t = QPoint::splat(2, {0, 0});
  QPoint s(2, 2);
  s.set_sheet(0, {1, 0});
  s.set_sheet(1, {-1, 0});
  REQUIRE_THAT(g_distance(t, s), Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-14));
}

TEST_CASE("g_distance equals brute force on random pairs") {
  Rng rng(12345);
  for (int q = 2; q <= 7; ++q) {
    for (int rep = 0; rep < 50; ++rep) {
      const QPoint t = random_qpoint(rng, q, 3);
      const QPoint s = random_qpoint(rng, q, 3);
      const double fast = g_distance2(t, s);
      const double slow = brute_force_g_distance2(t, s);
      REQUIRE_THAT(fast, Catch::Matchers::WithinAbs(slow, 1e-12));
    }
  }
}

TEST_CASE("g_distance dimension mismatch raises") {
  QPoint t(2, 2), s(2, 3);
  REQUIRE_THROWS_AS(g_distance(t, s), std::invalid_argument);
  QPoint r(3, 2);
  REQUIRE_THROWS_AS(g_distance(t, r), std::invalid_argument);
}

TEST_CASE("metric axioms on random triples") {
  Rng rng(777);
  for (int rep = 0; rep < 300; ++rep) {
    const int q = rng.uniform_int(2, 6);
    const int d = rng.uniform_int(1, 3);
    const QPoint a = random_qpoint(rng, q, d);
    const QPoint b = random_qpoint(rng, q, d);
    const QPoint c = random_qpoint(rng, q, d);
    const double ab = g_distance(a, b), ba = g_distance(b, a);
    const double bc = g_distance(b, c), ac = g_distance(a, c);
    REQUIRE(ab >= 0.0);
    REQUIRE_THAT(ab, Catch::Matchers::WithinAbs(ba, 1e-12));
    REQUIRE(ac <= ab + bc + 1e-12);
    REQUIRE(g_distance(a, a) == 0.0);
  }
}

TEST_CASE("identity of indiscernibles is multiset equality") {
  Rng rng(3);
  const QPoint a = random_qpoint(rng, 4, 3);
  Perm sigma = {2, 0, 3, 1};
  const QPoint b = a.permuted(sigma);
  REQUIRE(g_distance(a, b) == 0.0);
}

TEST_CASE("distance to Q[[0]] is the root sum of squares") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const QPoint a = random_qpoint(rng, 5, 3);
    const QPoint zero(5, 3);
    REQUIRE_THAT(g_distance2(a, zero), Catch::Matchers::WithinRel(g_norm2(a), 1e-12));
  }
}

TEST_CASE("eta_mean basics") {
  QPoint t(2, 2);
  t.set_sheet(0, {1, 0});
  t.set_sheet(1, {3, 0});
  const Vec mu = eta_mean(t);
  REQUIRE_THAT(mu[0], Catch::Matchers::WithinAbs(2.0, 1e-15));
  REQUIRE_THAT(mu[1], Catch::Matchers::WithinAbs(0.0, 1e-15));

  Rng rng(9);
  const Vec v = random_vec(rng, 3);
  const QPoint s = QPoint::splat(6, v);
  const Vec mv = eta_mean(s);
  for (int i = 0; i < 3; ++i) REQUIRE_THAT(mv[i], Catch::Matchers::WithinAbs(v[i], 1e-15));
}

TEST_CASE("eta_mean is 1/sqrt(Q)-Lipschitz for the G distance") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const int q = rng.uniform_int(2, 5);
    const QPoint a = random_qpoint(rng, q, 3);
    const QPoint b = random_qpoint(rng, q, 3);
    const double lhs = std::sqrt(dist2(eta_mean(a), eta_mean(b)));
    REQUIRE(lhs <= g_distance(a, b) / std::sqrt(double(q)) + 1e-12);
  }
}

TEST_CASE("spread_stats") {
  SECTION("splat point") {
    const auto st = spread_stats(QPoint::splat(3, {1, 2}));
    REQUIRE(st.diameter == 0.0);
    REQUIRE(st.separation == kInf);
    REQUIRE(st.support_cardinality == 1);
  }
  SECTION("separated pair") {
    QPoint t(2, 2);
    t.set_sheet(0, {0, 0});
    t.set_sheet(1, {1, 0});
    const auto st = spread_stats(t, 1e-9);
    REQUIRE_THAT(st.diameter, Catch::Matchers::WithinAbs(1.0, 1e-15));
    REQUIRE_THAT(st.separation, Catch::Matchers::WithinAbs(1.0, 1e-15));
    REQUIRE(st.support_cardinality == 2);
  }
  SECTION("partially collapsed") {
    QPoint t(3, 2);
    t.set_sheet(0, {0, 0});
    t.set_sheet(1, {0, 0});
    t.set_sheet(2, {2, 0});
    const auto st = spread_stats(t);
    REQUIRE_THAT(st.diameter, Catch::Matchers::WithinAbs(2.0, 1e-15));
    REQUIRE_THAT(st.separation, Catch::Matchers::WithinAbs(2.0, 1e-15));
    REQUIRE(st.support_cardinality == 2);
  }
}

TEST_CASE("fiber_project") {
  SECTION("full standard basis is the identity") {
    Rng rng(13);
    const QPoint t = random_qpoint(rng, 3, 4);
    std::vector<Vec> basis;
    for (int i = 0; i < 4; ++i) {
      Vec e(4, 0.0);
      e[i] = 1.0;
      basis.push_back(e);
    }
    REQUIRE(g_distance(fiber_project(t, basis), t) < 1e-14);
  }
  SECTION("single axis") {
    QPoint t(1, 3);
    t.set_sheet(0, {1, 2, 3});
    const QPoint p = fiber_project(t, {{0, 0, 1}});
    REQUIRE_THAT(p.sheet_vec(0)[0], Catch::Matchers::WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(p.sheet_vec(0)[1], Catch::Matchers::WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(p.sheet_vec(0)[2], Catch::Matchers::WithinAbs(3.0, 1e-15));
  }
  SECTION("matches explicit projector and is idempotent and 1-Lipschitz") {
    Rng rng(17);
    // orthonormal pair in R^4
    Vec b1 = normalized({1, 1, 0, 0});
    Vec b2 = normalized({0, 0, 1, -1});
    for (int rep = 0; rep < 50; ++rep) {
      const QPoint t = random_qpoint(rng, 3, 4);
      const QPoint s = random_qpoint(rng, 3, 4);
      const QPoint pt = fiber_project(t, {b1, b2});
      const QPoint ps = fiber_project(s, {b1, b2});
      // oracle: P = b1 b1^T + b2 b2^T applied row-wise
      for (int l = 0; l < 3; ++l) {
        const Vec x = t.sheet_vec(l);
        Vec y(4, 0.0);
        axpy(dot(x, b1), b1, y);
        axpy(dot(x, b2), b2, y);
        REQUIRE_THAT(dist2(pt.sheet_vec(l), y), Catch::Matchers::WithinAbs(0.0, 1e-24));
      }
      REQUIRE(g_distance(fiber_project(pt, {b1, b2}), pt) < 1e-12);
      REQUIRE(g_distance(pt, ps) <= g_distance(t, s) + 1e-12);
    }
  }
  SECTION("non-orthonormal basis raises with Gram deviation") {
    QPoint t(1, 3);
    t.set_sheet(0, {1, 0, 0});
    REQUIRE_THROWS_AS(fiber_project(t, {{1, 1, 0}}), std::invalid_argument);
  }
}

TEST_CASE("lexicographic tie-break among equal-cost matchings") {
  // two coincident sheets: every permutation is optimal, identity must win
  const QPoint t = QPoint::splat(3, {1, 1});
  const QPoint s = QPoint::splat(3, {0, 1});
  const Perm sigma = optimal_matching(t, s);
  for (int l = 0; l < 3; ++l) REQUIRE(sigma[l] == l);
}

TEST_CASE("canonical order and serialization round trip") {
  QPoint t(3, 2);
  t.set_sheet(0, {2, 0});
  t.set_sheet(1, {-1, 5});
  t.set_sheet(2, {-1, 3});
  const QPoint c = t.canonical();
  REQUIRE(c.sheet_vec(0)[0] == -1.0);
  REQUIRE(c.sheet_vec(0)[1] == 3.0);
  REQUIRE(c.sheet_vec(2)[0] == 2.0);
  const QPoint back = qpoint_from_string(qpoint_to_string(t));
  REQUIRE(g_distance(back, t) == 0.0);
}
