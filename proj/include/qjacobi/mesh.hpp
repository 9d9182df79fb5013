#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "qjacobi/core.hpp"
#include "qjacobi/scene.hpp"

namespace qjacobi {

// Triangulated 2-dimensional domain on Sigma. Vertices carry both chart
// coordinates (when a single chart covers the domain) and ambient positions.
// Cell areas are geodesic: spherical-excess areas on sphere scenes, flat
// areas on flat scenes, so the measured area of a triangulated geodesic ball
// matches the closed form to O(h^2) (exactly, for flat scenes).
struct Mesh {
  Scene scene;
  int m = 2;

  std::vector<Vec> chart;   // chart coordinates per vertex (empty if !has_chart)
  std::vector<Vec> pos;     // ambient positions on Sigma
  std::vector<std::array<int, 3>> cells;
  std::vector<double> cell_area;
  std::vector<char> boundary_vertex;
  std::vector<double> geo_radius;  // geodesic distance from the pole
  bool has_chart = true;
  bool closed = false;
  double h = 0.0;  // max geodesic cell diameter

  // polar structure metadata (set by make_polar_disk_mesh), used for O(1)
  // point location; zero when the mesh is unstructured
  double polar_R = 0.0;
  int polar_nr = 0, polar_nt = 0;

  struct Edge {
    int a, b;  // a < b
  };
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> cell_edges;    // edges (v0v1, v1v2, v0v2)
  std::vector<std::vector<int>> vertex_cells;    // incident cells
  std::vector<std::vector<int>> vertex_edges;    // incident edges

  int nv() const { return static_cast<int>(pos.size()); }
  int nc() const { return static_cast<int>(cells.size()); }
  int ne() const { return static_cast<int>(edges.size()); }

  double total_area() const {
    double a = 0.0;
    for (double c : cell_area) a += c;
    return a;
  }

  int edge_id(int a, int b) const {
    const int lo = std::min(a, b), hi = std::max(a, b);
    for (int e : vertex_edges[lo])
      if ((edges[e].a == lo && edges[e].b == hi)) return e;
    throw std::runtime_error("edge_id: no such edge");
  }
};

namespace detail {

// Area of the geodesic triangle on the unit sphere spanned by ambient points
// a, b, c (only the leading 3 coordinates carry the sphere for built-ins).
inline double spherical_triangle_area(const Vec& a, const Vec& b, const Vec& c) {
  const double ax = a[0], ay = a[1], az = a[2];
  const double bx = b[0], by = b[1], bz = b[2];
  const double cx = c[0], cy = c[1], cz = c[2];
  const double triple = ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx);
  const double ab = ax * bx + ay * by + az * bz;
  const double bc = bx * cx + by * cy + bz * cz;
  const double ca = cx * ax + cy * ay + cz * az;
  return 2.0 * std::atan2(std::abs(triple), 1.0 + ab + bc + ca);
}

inline double flat_triangle_area(const Vec& a, const Vec& b, const Vec& c) {
  // Gram determinant of the edge vectors, valid in any ambient dimension.
  Vec e1 = b - a, e2 = c - a;
  const double g11 = dot(e1, e1), g22 = dot(e2, e2), g12 = dot(e1, e2);
  return 0.5 * std::sqrt(std::max(0.0, g11 * g22 - g12 * g12));
}

inline void finalize_mesh(Mesh& mesh) {
  const int nv = mesh.nv();
  mesh.cell_area.resize(mesh.nc());
  mesh.h = 0.0;
  for (int c = 0; c < mesh.nc(); ++c) {
    const auto& t = mesh.cells[c];
    const Vec &a = mesh.pos[t[0]], &b = mesh.pos[t[1]], &cc = mesh.pos[t[2]];
    mesh.cell_area[c] = mesh.scene.flat() ? flat_triangle_area(a, b, cc)
                                          : spherical_triangle_area(a, b, cc);
    for (int i = 0; i < 3; ++i) {
      const double len = mesh.scene.geodesic_distance(mesh.pos[t[i]], mesh.pos[t[(i + 1) % 3]]);
      mesh.h = std::max(mesh.h, len);
    }
  }

  // unique edges + adjacency
  std::map<std::pair<int, int>, int> idx;
  mesh.edges.clear();
  mesh.cell_edges.assign(mesh.nc(), {});
  std::vector<int> edge_cell_count;
  for (int c = 0; c < mesh.nc(); ++c) {
    const auto& t = mesh.cells[c];
    const std::array<std::pair<int, int>, 3> loc = {
        std::make_pair(t[0], t[1]), std::make_pair(t[1], t[2]), std::make_pair(t[0], t[2])};
    for (int s = 0; s < 3; ++s) {
      auto key = std::minmax(loc[s].first, loc[s].second);
      auto it = idx.find(key);
      int e;
      if (it == idx.end()) {
        e = static_cast<int>(mesh.edges.size());
        idx.emplace(key, e);
        mesh.edges.push_back({key.first, key.second});
        edge_cell_count.push_back(0);
      } else {
        e = it->second;
      }
      mesh.cell_edges[c][s] = e;
      edge_cell_count[e]++;
    }
  }

  mesh.boundary_vertex.assign(nv, 0);
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    if (edge_cell_count[e] == 1) {
      mesh.boundary_vertex[mesh.edges[e].a] = 1;
      mesh.boundary_vertex[mesh.edges[e].b] = 1;
    }
  }
  mesh.closed = std::none_of(mesh.boundary_vertex.begin(), mesh.boundary_vertex.end(),
                             [](char f) { return f != 0; });

  mesh.vertex_cells.assign(nv, {});
  for (int c = 0; c < mesh.nc(); ++c)
    for (int i = 0; i < 3; ++i) mesh.vertex_cells[mesh.cells[c][i]].push_back(c);
  mesh.vertex_edges.assign(nv, {});
  for (int e = 0; e < mesh.ne(); ++e) {
    mesh.vertex_edges[mesh.edges[e].a].push_back(e);
    mesh.vertex_edges[mesh.edges[e].b].push_back(e);
  }
}

}  // namespace detail

// Structured triangulation of the square [0,L]^2 on a flat scene.
inline Mesh make_square_mesh(const Scene& scene, int n, double length = 1.0) {
  if (!scene.flat() || scene.m() != 2)
    throw std::invalid_argument("make_square_mesh: needs a flat scene with m = 2");
  Mesh mesh;
  mesh.scene = scene;
  const double dx = length / n;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      Vec y = {i * dx, j * dx};
      mesh.chart.push_back(y);
      mesh.pos.push_back(scene.chart(y));
    }
  auto vid = [&](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      mesh.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  mesh.geo_radius.resize(mesh.nv());
  for (int v = 0; v < mesh.nv(); ++v) mesh.geo_radius[v] = norm(mesh.chart[v]);
  detail::finalize_mesh(mesh);
  return mesh;
}

// Polar triangulation of the geodesic disk of radius R around the chart pole:
// n_r concentric rings with n_t vertices each, plus the pole vertex. Works on
// flat scenes (any R) and as a spherical cap (R < pi). The pole is an exact
// mesh vertex and every ring lies on an exact geodesic circle.
inline Mesh make_polar_disk_mesh(const Scene& scene, double R, int n_r, int n_t) {
  if (scene.m() != 2) throw std::invalid_argument("make_polar_disk_mesh: needs m = 2");
  if (R >= scene.injectivity_radius())
    throw std::invalid_argument("make_polar_disk_mesh: radius exceeds injectivity bound");
  if (n_r < 1 || n_t < 3) throw std::invalid_argument("make_polar_disk_mesh: bad resolution");
  Mesh mesh;
  mesh.scene = scene;
  mesh.chart.push_back(Vec(2, 0.0));
  mesh.pos.push_back(scene.chart(mesh.chart.back()));
  for (int i = 1; i <= n_r; ++i) {
    const double r = R * i / n_r;
    for (int j = 0; j < n_t; ++j) {
      const double th = 2.0 * kPi * j / n_t;
      Vec y = {r * std::cos(th), r * std::sin(th)};
      mesh.chart.push_back(y);
      mesh.pos.push_back(scene.chart(y));
    }
  }
  auto vid = [&](int i, int j) { return i == 0 ? 0 : 1 + (i - 1) * n_t + ((j % n_t + n_t) % n_t); };
  for (int j = 0; j < n_t; ++j) mesh.cells.push_back({0, vid(1, j), vid(1, j + 1)});
  for (int i = 1; i < n_r; ++i)
    for (int j = 0; j < n_t; ++j) {
      mesh.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  mesh.geo_radius.resize(mesh.nv());
  for (int v = 0; v < mesh.nv(); ++v) mesh.geo_radius[v] = norm(mesh.chart[v]);
  mesh.polar_R = R;
  mesh.polar_nr = n_r;
  mesh.polar_nt = n_t;
  detail::finalize_mesh(mesh);
  return mesh;
}

// Subdivided icosahedron on the closed equator S^2 of equatorial_sphere(2).
// No single chart covers it; vertices carry ambient positions only, and cell
// areas are spherical excesses so the total area is exactly 4*pi.
inline Mesh make_icosphere_mesh(const Scene& scene, int level) {
  if (scene.flat() || scene.m() != 2)
    throw std::invalid_argument("make_icosphere_mesh: needs equatorial_sphere(2)");
  Mesh mesh;
  mesh.scene = scene;
  mesh.has_chart = false;

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<std::array<double, 3>> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : verts) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    v = {v[0] / n, v[1] / n, v[2] / n};
  }
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      std::array<double, 3> m = {verts[a][0] + verts[b][0], verts[a][1] + verts[b][1],
                                 verts[a][2] + verts[b][2]};
      const double n = std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
      m = {m[0] / n, m[1] / n, m[2] / n};
      verts.push_back(m);
      const int id = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  const int d = scene.d();
  for (const auto& v : verts) {
    Vec x(d, 0.0);
    x[0] = v[0];
    x[1] = v[1];
    x[2] = v[2];
    mesh.pos.push_back(x);
  }
  for (const auto& f : faces) mesh.cells.push_back({f[0], f[1], f[2]});

  // geodesic radius from the chart pole e_{m+1} = e_3
  mesh.geo_radius.resize(mesh.nv());
  for (int v = 0; v < mesh.nv(); ++v)
    mesh.geo_radius[v] = std::acos(std::min(1.0, std::max(-1.0, mesh.pos[v][2])));
  detail::finalize_mesh(mesh);
  return mesh;
}

}  // namespace qjacobi
