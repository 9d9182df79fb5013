#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <queue>
#include <vector>

#include "qjacobi/mesh.hpp"
#include "qjacobi/qpoint.hpp"

namespace qjacobi {

// Q-valued map sampled at mesh vertices, with per-edge sheet matchings kept
// g-distance-optimal. Mutating vertex values invalidates the matchings; the
// energy routines refuse to run on stale matchings.
class DiscreteQField {
 public:
  DiscreteQField(const Mesh& mesh, int q, bool normal_section = false)
      : mesh_(&mesh),
        q_(q),
        d_(mesh.scene.d()),
        normal_section_(normal_section),
        values_(mesh.nv(), QPoint(q, mesh.scene.d())),
        edge_match_(mesh.ne()),
        matchings_valid_(false) {}

  // Sample a Q-valued function given in chart coordinates.
  static DiscreteQField from_chart_function(const Mesh& mesh, int q,
                                            const std::function<QPoint(const Vec&)>& f,
                                            bool normal_section = false) {
    if (!mesh.has_chart)
      throw std::invalid_argument("from_chart_function: mesh carries no chart");
    DiscreteQField u(mesh, q, normal_section);
    for (int v = 0; v < mesh.nv(); ++v) u.values_[v] = f(mesh.chart[v]);
    u.rematch();
    return u;
  }

  // Sample a Q-valued function of the ambient position on Sigma.
  static DiscreteQField from_ambient_function(const Mesh& mesh, int q,
                                              const std::function<QPoint(const Vec&)>& f,
                                              bool normal_section = false) {
    DiscreteQField u(mesh, q, normal_section);
    for (int v = 0; v < mesh.nv(); ++v) u.values_[v] = f(mesh.pos[v]);
    u.rematch();
    return u;
  }

  const Mesh& mesh() const { return *mesh_; }
  int q() const { return q_; }
  int d() const { return d_; }
  bool normal_section() const { return normal_section_; }
  void set_normal_section(bool b) { normal_section_ = b; }

  const QPoint& value(int v) const { return values_[v]; }
  void set_value(int v, const QPoint& t) {
    if (t.q() != q_ || t.d() != d_)
      throw std::invalid_argument("DiscreteQField::set_value: shape mismatch");
    values_[v] = t;
    matchings_valid_ = false;
  }

  // Direct sheet access used by the solver; caller must rematch afterwards.
  double* sheet(int v, int l) { matchings_valid_ = false; return values_[v].sheet(l); }
  const double* sheet(int v, int l) const { return values_[v].sheet(l); }

  bool matchings_valid() const { return matchings_valid_; }

  void require_matchings(const char* who) const {
    if (!matchings_valid_)
      throw std::runtime_error(std::string(who) +
                               ": stale sheet matchings, call rematch() after edits");
  }

  // Recompute every per-edge matching to be g-distance-optimal.
  void rematch() {
    for (int e = 0; e < mesh_->ne(); ++e) {
      const auto& ed = mesh_->edges[e];
      edge_match_[e] = optimal_matching(values_[ed.a], values_[ed.b]);
    }
    matchings_valid_ = true;
  }

  // Re-verify that each stored matching realizes the G distance.
  bool matchings_optimal(double tol = 1e-12) const {
    for (int e = 0; e < mesh_->ne(); ++e) {
      const auto& ed = mesh_->edges[e];
      const auto cost = sheet_cost_matrix(values_[ed.a], values_[ed.b]);
      Perm tmp;
      const double best = solve_assignment(cost, q_, tmp);
      double stored = 0.0;
      for (int l = 0; l < q_; ++l) stored += cost[l * q_ + edge_match_[e][l]];
      if (stored > best + tol * (1.0 + best)) return false;
    }
    return true;
  }

  // Force a (possibly non-optimal) matching on one edge; used by the solver's
  // annealed monodromy moves.
  void force_edge_match(int e, const Perm& sigma) { edge_match_[e] = sigma; }

  // Matching from the sheets of vertex a to the sheets of vertex b along the
  // (existing) edge between them.
  Perm directed_match(int a, int b) const {
    const int e = mesh_->edge_id(a, b);
    const auto& ed = mesh_->edges[e];
    if (ed.a == a) return edge_match_[e];
    Perm inv(q_);
    for (int l = 0; l < q_; ++l) inv[edge_match_[e][l]] = l;
    return inv;
  }

  // Per-cell matched sheet selections anchored at a designated cell vertex:
  // row l of the result is (sheet at anchor, matched sheet at the other two
  // vertices), as indices into the stored orders. The anchor is the vertex
  // whose sheets are best separated (ties by vertex index), so collapsed
  // Q-points never mediate the pairing between the other two vertices.
  struct CellSelection {
    std::array<int, 3> vertex;            // anchor first
    std::vector<std::array<int, 3>> rows; // Q rows of sheet indices
    bool consistent;                      // edge matchings commute around the cell
  };

  double min_sheet_separation(int v) const {
    double sep = kInf;
    const QPoint& t = values_[v];
    for (int a = 0; a < q_; ++a)
      for (int b = a + 1; b < q_; ++b)
        sep = std::min(sep, dist2(t.sheet_vec(a), t.sheet_vec(b)));
    return q_ > 1 ? sep : 0.0;
  }

  CellSelection cell_selection(int c) const {
    const auto& t = mesh_->cells[c];
    CellSelection sel;
    int a = 0;
    double best = min_sheet_separation(t[0]);
    for (int i = 1; i < 3; ++i) {
      const double sep = min_sheet_separation(t[i]);
      if (sep > best || (sep == best && t[i] < t[a])) {
        best = sep;
        a = i;
      }
    }
    sel.vertex = {t[a], t[(a + 1) % 3], t[(a + 2) % 3]};
    const Perm s01 = directed_match(sel.vertex[0], sel.vertex[1]);
    const Perm s02 = directed_match(sel.vertex[0], sel.vertex[2]);
    const Perm s12 = directed_match(sel.vertex[1], sel.vertex[2]);
    sel.rows.resize(q_);
    sel.consistent = true;
    for (int l = 0; l < q_; ++l) {
      sel.rows[l] = {l, s01[l], s02[l]};
      if (s12[s01[l]] != s02[l]) sel.consistent = false;
    }
    return sel;
  }

  int count_inconsistent_cells() const {
    require_matchings("count_inconsistent_cells");
    int n = 0;
    for (int c = 0; c < mesh_->nc(); ++c)
      if (!cell_selection(c).consistent) ++n;
    return n;
  }

  // Max deviation of any sheet from the normal fiber at its vertex.
  double normal_fiber_deviation() const {
    double dev = 0.0;
    for (int v = 0; v < mesh_->nv(); ++v) {
      for (int l = 0; l < q_; ++l) {
        const Vec s = values_[v].sheet_vec(l);
        const Vec p = mesh_->scene.project_normal_fiber(mesh_->pos[v], s);
        for (int i = 0; i < d_; ++i) dev = std::max(dev, std::abs(p[i] - s[i]));
      }
    }
    return dev;
  }

  void require_normal_section(const char* who, double tol = 1e-8) const {
    if (!normal_section_)
      throw std::invalid_argument(std::string(who) + ": needs a normal-section field");
    const double dev = normal_fiber_deviation();
    if (dev > tol)
      throw std::invalid_argument(std::string(who) + ": sheet off the normal fiber by " +
                                  std::to_string(dev));
  }

  double max_sheet_norm() const {
    double mx = 0.0;
    for (const auto& t : values_)
      for (int l = 0; l < q_; ++l) mx = std::max(mx, norm(t.sheet_vec(l)));
    return mx;
  }

  double l2_norm2(const std::vector<int>& region = {}) const;  // defined in energy.hpp

 private:
  const Mesh* mesh_;
  int q_, d_;
  bool normal_section_;
  std::vector<QPoint> values_;
  std::vector<Perm> edge_match_;
  bool matchings_valid_;

  friend class FieldEvaluator;
};

// ---------------------------------------------------------------------------
// Lipschitz selection along a spanning tree, with monodromy report.

struct BranchReport {
  struct Obstruction {
    int edge;    // mesh edge whose matching closes a loop with holonomy
    Perm cycle;  // the holonomy permutation
  };
  std::vector<Obstruction> obstructions;
  bool global_selection_exists() const { return obstructions.empty(); }
};

struct Selection {
  // label[v][s] = stored sheet index at vertex v carrying global selection s
  std::vector<Perm> label;
  BranchReport report;
  std::vector<char> visited;
};

// Propagate per-edge matchings along a BFS spanning tree of the region (a set
// of cells; empty = everything). Produces Q single-valued vertex fields whose
// multiset at each vertex equals the input, plus the list of non-tree edges
// whose holonomy obstructs a global selection.
inline Selection lipschitz_selection(const DiscreteQField& u, const std::vector<int>& region = {}) {
  u.require_matchings("lipschitz_selection");
  const Mesh& mesh = u.mesh();
  const int q = u.q();

  std::vector<char> vertex_in(mesh.nv(), 0), edge_in(mesh.ne(), 0);
  if (region.empty()) {
    std::fill(vertex_in.begin(), vertex_in.end(), 1);
    std::fill(edge_in.begin(), edge_in.end(), 1);
  } else {
    for (int c : region) {
      for (int i = 0; i < 3; ++i) vertex_in[mesh.cells[c][i]] = 1;
      for (int e : mesh.cell_edges[c]) edge_in[e] = 1;
    }
  }

  Selection sel;
  sel.label.assign(mesh.nv(), Perm());
  sel.visited.assign(mesh.nv(), 0);

  Perm identity(q);
  for (int l = 0; l < q; ++l) identity[l] = l;

  for (int root = 0; root < mesh.nv(); ++root) {
    if (!vertex_in[root] || sel.visited[root]) continue;
    sel.label[root] = identity;
    sel.visited[root] = 1;
    std::queue<int> bfs;
    bfs.push(root);
    while (!bfs.empty()) {
      const int v = bfs.front();
      bfs.pop();
      for (int e : mesh.vertex_edges[v]) {
        if (!edge_in[e]) continue;
        const auto& ed = mesh.edges[e];
        const int w = (ed.a == v) ? ed.b : ed.a;
        const Perm step = u.directed_match(v, w);
        if (!sel.visited[w]) {
          sel.label[w].resize(q);
          for (int s = 0; s < q; ++s) sel.label[w][s] = step[sel.label[v][s]];
          sel.visited[w] = 1;
          bfs.push(w);
        } else {
          // closed loop through the tree: check holonomy
          bool trivial = true;
          Perm holo(q);
          for (int s = 0; s < q; ++s) {
            // follow selection s across the edge and compare labels
            holo[s] = 0;
            const int carried = step[sel.label[v][s]];
            int s2 = 0;
            while (sel.label[w][s2] != carried) ++s2;
            holo[s] = s2;
            if (s2 != s) trivial = false;
          }
          if (!trivial) {
            bool known = false;
            for (const auto& o : sel.report.obstructions)
              if (o.edge == e) known = true;
            if (!known) sel.report.obstructions.push_back({e, holo});
          }
        }
      }
    }
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Point evaluation of a field at arbitrary chart coordinates (P1 interpolation
// with the cell's matched selection).

class FieldEvaluator {
 public:
  explicit FieldEvaluator(const DiscreteQField& u) : u_(&u) {
    u.require_matchings("FieldEvaluator");
    if (!u.mesh().has_chart)
      throw std::invalid_argument("FieldEvaluator: mesh carries no chart");
  }

  QPoint operator()(const Vec& y) const {
    int c;
    double l0, l1, l2;
    locate(y, c, l0, l1, l2);
    const auto sel = u_->cell_selection(c);
    const double lam[3] = {l0, l1, l2};
    // reorder barycentric weights to the anchored vertex order
    double w[3] = {0, 0, 0};
    const auto& t = u_->mesh().cells[c];
    for (int i = 0; i < 3; ++i)
      for (int jj = 0; jj < 3; ++jj)
        if (sel.vertex[i] == t[jj]) w[i] = lam[jj];
    QPoint out(u_->q(), u_->d());
    for (int l = 0; l < u_->q(); ++l) {
      Vec s(u_->d(), 0.0);
      for (int i = 0; i < 3; ++i)
        axpy(w[i], u_->value(sel.vertex[i]).sheet_vec(sel.rows[l][i]), s);
      out.set_sheet(l, s);
    }
    return out;
  }

 private:
  static double cell_deficiency(const Mesh& mesh, int c, const Vec& y, double bl[3]) {
    const auto& t = mesh.cells[c];
    const Vec &a = mesh.chart[t[0]], &b = mesh.chart[t[1]], &cc = mesh.chart[t[2]];
    const double det = (b[0] - a[0]) * (cc[1] - a[1]) - (cc[0] - a[0]) * (b[1] - a[1]);
    if (std::abs(det) < 1e-300) return kInf;
    const double m0 = ((b[0] - y[0]) * (cc[1] - y[1]) - (cc[0] - y[0]) * (b[1] - y[1])) / det;
    const double m1 = ((cc[0] - y[0]) * (a[1] - y[1]) - (a[0] - y[0]) * (cc[1] - y[1])) / det;
    const double m2 = 1.0 - m0 - m1;
    bl[0] = m0;
    bl[1] = m1;
    bl[2] = m2;
    return std::max({-m0, -m1, -m2, 0.0});
  }

  void locate(const Vec& y, int& cell, double& l0, double& l1, double& l2) const {
    const Mesh& mesh = u_->mesh();
    double best_def = kInf;
    int best_cell = -1;
    double bl[3] = {0, 0, 0};
    auto consider = [&](int c) {
      double cand[3];
      const double def = cell_deficiency(mesh, c, y, cand);
      if (def < best_def) {
        best_def = def;
        best_cell = c;
        bl[0] = cand[0];
        bl[1] = cand[1];
        bl[2] = cand[2];
      }
      return def == 0.0;
    };

    if (mesh.polar_nr > 0) {
      // structured lookup: ring band and angular sector
      const double r = std::sqrt(y[0] * y[0] + y[1] * y[1]);
      const double dr = mesh.polar_R / mesh.polar_nr;
      double th = std::atan2(y[1], y[0]);
      if (th < 0) th += 2.0 * kPi;
      const int nt = mesh.polar_nt;
      const int jc = static_cast<int>(th / (2.0 * kPi / nt));
      int band = static_cast<int>(r / dr);  // 0 = center fan
      band = std::min(band, mesh.polar_nr - 1);
      bool found = false;
      for (int db = -1; db <= 1 && !found; ++db) {
        const int b = band + db;
        if (b < 0 || b >= mesh.polar_nr) continue;
        for (int dj = -1; dj <= 1 && !found; ++dj) {
          const int j = ((jc + dj) % nt + nt) % nt;
          if (b == 0) {
            found = consider(j);
          } else {
            const int base = nt + 2 * ((b - 1) * nt + j);
            found = consider(base) || consider(base + 1);
          }
        }
      }
      if (best_def < 1e-9) {
        cell = best_cell;
        normalize_bary(bl, l0, l1, l2);
        return;
      }
      // fall through to the exhaustive scan on miss (e.g. boundary roundoff)
    }

    for (int c = 0; c < mesh.nc(); ++c)
      if (consider(c)) break;
    if (best_cell < 0 || best_def > 0.25)
      throw std::invalid_argument("FieldEvaluator: point outside the meshed domain");
    cell = best_cell;
    normalize_bary(bl, l0, l1, l2);
  }

  static void normalize_bary(const double bl[3], double& l0, double& l1, double& l2) {
    const double c0 = std::max(0.0, bl[0]), c1 = std::max(0.0, bl[1]), c2 = std::max(0.0, bl[2]);
    const double s = c0 + c1 + c2;
    l0 = c0 / s;
    l1 = c1 / s;
    l2 = c2 / s;
  }

  const DiscreteQField* u_;
};

}  // namespace qjacobi
