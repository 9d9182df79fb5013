#include <catch2/catch_amalgamated.hpp>

#include "qjacobi/energy.hpp"
#include "qjacobi/qfield.hpp"
#include "test_support.hpp"

using namespace qjacobi;

namespace {

// u(z) = sum_{w^2 = z} [[ w^3 ]] as a normal-section field on flat_disk(2,2):
// sheets +-(Re z^{3/2}, Im z^{3/2}) placed in the two normal coordinates.
QPoint w3_value(const Vec& y) {
  const double r = std::hypot(y[0], y[1]);
  const double th = std::atan2(y[1], y[0]);
  const double rho = std::pow(r, 1.5);
  const double a = rho * std::cos(1.5 * th);
  const double b = rho * std::sin(1.5 * th);
  QPoint t(2, 4);
  t.set_sheet(0, {0, 0, a, b});
  t.set_sheet(1, {0, 0, -a, -b});
  return t;
}

DiscreteQField make_w3_field(const Mesh& mesh) {
  return DiscreteQField::from_chart_function(mesh, 2, w3_value, /*normal_section=*/true);
}

}  // namespace

TEST_CASE("mesh areas match closed forms") {
  SECTION("flat polar disk") {
    const Scene s = Scene::flat_disk(2, 2);
    const Mesh coarse = make_polar_disk_mesh(s, 1.0, 16, 48);
    const Mesh fine = make_polar_disk_mesh(s, 1.0, 32, 96);
    const double e0 = std::abs(coarse.total_area() - kPi);
    const double e1 = std::abs(fine.total_area() - kPi);
    REQUIRE(e0 < 0.01);
    REQUIRE(e1 < e0 / 3.0);  // ~ O(h^2)
  }
  SECTION("spherical cap") {
    const Scene s = Scene::equatorial_sphere(2);
    const double R = 1.0;
    const Mesh mesh = make_polar_disk_mesh(s, R, 24, 72);
    REQUIRE_THAT(mesh.total_area(),
                 Catch::Matchers::WithinRel(s.geodesic_ball_area(R), 2e-3));
  }
  SECTION("icosphere covers S^2 exactly") {
    const Scene s = Scene::equatorial_sphere(2);
    const Mesh mesh = make_icosphere_mesh(s, 3);
    REQUIRE_THAT(mesh.total_area(), Catch::Matchers::WithinRel(4.0 * kPi, 1e-12));
    REQUIRE(mesh.closed);
  }
  SECTION("square mesh is exact") {
    const Scene s = Scene::flat_disk(2, 1);
    const Mesh mesh = make_square_mesh(s, 8);
    REQUIRE_THAT(mesh.total_area(), Catch::Matchers::WithinRel(1.0, 1e-14));
    REQUIRE(!mesh.closed);
  }
}

TEST_CASE("boundary of the disk mesh is a closed loop") {
  const Scene s = Scene::flat_disk(2, 1);
  const Mesh mesh = make_polar_disk_mesh(s, 1.0, 8, 24);
  int nb = 0;
  for (char b : mesh.boundary_vertex) nb += b;
  REQUIRE(nb == 24);  // outermost ring only
}

TEST_CASE("constant field has zero energy in all flavors") {
  const Scene s = Scene::flat_disk(2, 2);
  const Mesh mesh = make_polar_disk_mesh(s, 1.0, 8, 24);
  auto f = [](const Vec&) {
    QPoint t(3, 4);
    t.set_sheet(0, {0, 0, 1.0, 2.0});
    t.set_sheet(1, {0, 0, -1.0, 0.5});
    t.set_sheet(2, {0, 0, 0.0, 0.0});
    return t;
  };
  const auto u = DiscreteQField::from_chart_function(mesh, 3, f, true);
  REQUIRE(dirichlet_energy(u, DirFlavor::Full) == 0.0);
  REQUIRE(dirichlet_energy(u, DirFlavor::TangentM) == 0.0);
  REQUIRE(dirichlet_energy(u, DirFlavor::Normal) == 0.0);
}

TEST_CASE("affine single-valued field on the unit square has exact energy") {
  const Scene s = Scene::flat_disk(2, 1);
  const Mesh mesh = make_square_mesh(s, 6);
  // u(x) = L x with L = ((1,0),(0,2)) placed in ambient coordinates 0,1
  auto f = [](const Vec& y) {
    QPoint t(1, 3);
    t.set_sheet(0, {y[0], 2.0 * y[1], 0.0});
    return t;
  };
  const auto u = DiscreteQField::from_chart_function(mesh, 1, f);
  REQUIRE_THAT(dirichlet_energy(u), Catch::Matchers::WithinRel(5.0, 1e-13));
}

TEST_CASE("branched w^3 field has energy 6 pi") {
  const Scene s = Scene::flat_disk(2, 2);
  const Mesh coarse = make_polar_disk_mesh(s, 1.0, 24, 96);
  const Mesh fine = make_polar_disk_mesh(s, 1.0, 48, 192);
  const double e0 = std::abs(dirichlet_energy(make_w3_field(coarse)) - 6.0 * kPi);
  const double e1 = std::abs(dirichlet_energy(make_w3_field(fine)) - 6.0 * kPi);
  REQUIRE(e0 / (6.0 * kPi) < 0.01);
  REQUIRE(e1 < 0.4 * e0);  // second-order-ish decay
}

TEST_CASE("flavor ordering full >= tangent_M >= normal") {
  const Scene s = Scene::equatorial_sphere(2);
  const Mesh mesh = make_polar_disk_mesh(s, 1.2, 12, 36);
  qjacobi::Rng rng(21);
  // normal-section field with smooth coefficient
  auto f = [&](const Vec& y) {
    QPoint t(2, 4);
    const double c1 = std::sin(y[0]) + 0.3 * y[1];
    const double c2 = -0.7 + y[0] * y[1];
    t.set_sheet(0, {0, 0, 0, c1});
    t.set_sheet(1, {0, 0, 0, c2});
    return t;
  };
  auto u = DiscreteQField::from_chart_function(mesh, 2, f, true);
  // sheet values as sampled are expressed in the constant frame e_4, which is
  // the exact normal fiber at every point of the equator
  const double full = dirichlet_energy(u, DirFlavor::Full);
  const double tm = dirichlet_energy(u, DirFlavor::TangentM);
  const double nn = dirichlet_energy(u, DirFlavor::Normal);
  REQUIRE(full >= tm - 1e-14);
  REQUIRE(tm >= nn - 1e-14);
  REQUIRE(full > 0.0);
}

TEST_CASE("energy is invariant under stored-sheet reordering") {
  const Scene s = Scene::flat_disk(2, 2);
  const Mesh mesh = make_polar_disk_mesh(s, 1.0, 12, 48);
  auto u = make_w3_field(mesh);
  const double base = dirichlet_energy(u);

  // shuffle the stored order at every vertex
  qjacobi::Rng rng(33);
  auto v = DiscreteQField(mesh, 2, true);
  for (int i = 0; i < mesh.nv(); ++i) {
    QPoint t = u.value(i);
    if (rng.uniform() < 0.5) {
      Perm swap = {1, 0};
      t = t.permuted(swap);
    }
    v.set_value(i, t);
  }
  v.rematch();
  REQUIRE_THAT(dirichlet_energy(v), Catch::Matchers::WithinRel(base, 1e-12));
}

TEST_CASE("stale matchings are refused with a rematch hint") {
  const Scene s = Scene::flat_disk(2, 1);
  const Mesh mesh = make_polar_disk_mesh(s, 1.0, 4, 12);
  auto u = DiscreteQField(mesh, 1);
  u.set_value(0, QPoint::splat(1, Vec{1.0, 0.0, 0.0}));
  REQUIRE_THROWS_WITH(dirichlet_energy(u), Catch::Matchers::ContainsSubstring("rematch"));
  u.rematch();
  REQUIRE_NOTHROW(dirichlet_energy(u));
}

TEST_CASE("matchings realize the G distance and can be re-verified") {
  const Scene s = Scene::flat_disk(2, 2);
  const Mesh mesh = make_polar_disk_mesh(s, 1.0, 8, 32);
  const auto u = make_w3_field(mesh);
  REQUIRE(u.matchings_optimal());
}

TEST_CASE("lipschitz selection") {
  const Scene s = Scene::flat_disk(2, 2);
  const Mesh mesh = make_polar_disk_mesh(s, 1.0, 10, 40);

  SECTION("separated smooth sheets give global selections") {
    auto f = [](const Vec& y) {
      QPoint t(2, 4);
      t.set_sheet(0, {0, 0, std::sin(y[0]), y[1]});
      t.set_sheet(1, {0, 0, 3.0 + y[0], -y[1]});
      return t;
    };
    const auto u = DiscreteQField::from_chart_function(mesh, 2, f, true);
    const auto sel = lipschitz_selection(u);
    REQUIRE(sel.report.global_selection_exists());
    // the two selections are coherent: selection 0 stays on the sin-branch
    for (int v = 0; v < mesh.nv(); ++v) {
      const Vec a = u.value(v).sheet_vec(sel.label[v][0]);
      REQUIRE(a[2] < 2.0);
    }
  }

  SECTION("square-root field on an annulus has 2-cycle holonomy") {
    auto f = [](const Vec& y) {
      const double r = std::hypot(y[0], y[1]);
      const double th = std::atan2(y[1], y[0]);
      QPoint t(2, 4);
      const double a = std::sqrt(r) * std::cos(0.5 * th);
      const double b = std::sqrt(r) * std::sin(0.5 * th);
      t.set_sheet(0, {0, 0, a, b});
      t.set_sheet(1, {0, 0, -a, -b});
      return t;
    };
    const auto u = DiscreteQField::from_chart_function(mesh, 2, f, true);
    // annulus region: cells with all vertices at radius > 0.3
    std::vector<int> annulus;
    for (int c = 0; c < mesh.nc(); ++c) {
      bool in = true;
      for (int i = 0; i < 3; ++i)
        if (mesh.geo_radius[mesh.cells[c][i]] < 0.3) in = false;
      if (in) annulus.push_back(c);
    }
    const auto sel = lipschitz_selection(u, annulus);
    REQUIRE_FALSE(sel.report.global_selection_exists());
    const auto& holo = sel.report.obstructions.front().cycle;
    REQUIRE(holo[0] == 1);
    REQUIRE(holo[1] == 0);
  }

  SECTION("constant splat gives Q identical selections") {
    auto f = [](const Vec&) { return QPoint::splat(3, Vec{0, 0, 1.0, 2.0}); };
    const auto u = DiscreteQField::from_chart_function(mesh, 3, f, true);
    const auto sel = lipschitz_selection(u);
    REQUIRE(sel.report.global_selection_exists());
  }
}

TEST_CASE("field evaluator interpolates linearly") {
  const Scene s = Scene::flat_disk(2, 2);
  const Mesh mesh = make_polar_disk_mesh(s, 1.0, 16, 64);
  auto f = [](const Vec& y) {
    QPoint t(2, 4);
    t.set_sheet(0, {0, 0, 1.0 + y[0] + 2.0 * y[1], 0});
    t.set_sheet(1, {0, 0, -5.0 + y[0], y[1]});
    return t;
  };
  const auto u = DiscreteQField::from_chart_function(mesh, 2, f, true);
  const FieldEvaluator eval(u);
  qjacobi::Rng rng(55);
  for (int rep = 0; rep < 50; ++rep) {
    const double r = 0.95 * std::sqrt(rng.uniform());
    const double th = rng.uniform(0, 2 * kPi);
    const Vec y = {r * std::cos(th), r * std::sin(th)};
    // piecewise affine interpolation of an affine function is exact
    REQUIRE(g_distance(eval(y), f(y)) < 1e-12);
  }
}

TEST_CASE("l2 norm matches closed form") {
  const Scene s = Scene::flat_disk(2, 2);
  const Mesh mesh = make_polar_disk_mesh(s, 1.0, 32, 128);
  const auto u = make_w3_field(mesh);
  // int_{D_1} 2 |z|^3 = 2 * 2pi/5
  REQUIRE_THAT(u.l2_norm2(), Catch::Matchers::WithinRel(4.0 * kPi / 5.0, 2e-3));
}
