#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "qjacobi/assignment.hpp"
#include "qjacobi/core.hpp"

namespace qjacobi {

// A point of A_Q(R^d): an unordered Q-tuple of vectors in R^d. Sheets are
// stored as an ordered list, but every operation is permutation-invariant;
// canonical (lexicographically sorted) order is used only for hashing and
// serialization.
class QPoint {
 public:
  QPoint() = default;
  QPoint(int q, int d) : q_(q), d_(d), data_(static_cast<std::size_t>(q) * d, 0.0) {
    if (q < 1 || d < 1) throw std::invalid_argument("QPoint: need Q >= 1, d >= 1");
  }

  // Q copies of a single vector, the paper's Q[[v]].
  static QPoint splat(int q, const Vec& v) {
    QPoint t(q, static_cast<int>(v.size()));
    for (int l = 0; l < q; ++l) t.set_sheet(l, v);
    return t;
  }

  int q() const { return q_; }
  int d() const { return d_; }

  double* sheet(int l) { return data_.data() + static_cast<std::size_t>(l) * d_; }
  const double* sheet(int l) const { return data_.data() + static_cast<std::size_t>(l) * d_; }

  Vec sheet_vec(int l) const {
    return Vec(sheet(l), sheet(l) + d_);
  }

  void set_sheet(int l, const Vec& v) {
    if (static_cast<int>(v.size()) != d_) throw std::invalid_argument("QPoint: sheet dimension mismatch");
    std::copy(v.begin(), v.end(), sheet(l));
  }

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

  bool same_shape(const QPoint& o) const { return q_ == o.q_ && d_ == o.d_; }

  // Lexicographic sort of sheets; canonical representative of the A_Q class.
  QPoint canonical() const {
    std::vector<int> idx(q_);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return std::lexicographical_compare(sheet(a), sheet(a) + d_, sheet(b), sheet(b) + d_);
    });
    QPoint out(q_, d_);
    for (int l = 0; l < q_; ++l)
      std::copy(sheet(idx[l]), sheet(idx[l]) + d_, out.sheet(l));
    return out;
  }

  QPoint permuted(const Perm& sigma) const {
    QPoint out(q_, d_);
    for (int l = 0; l < q_; ++l)
      std::copy(sheet(l), sheet(l) + d_, out.sheet(sigma[l]));
    return out;
  }

 private:
  int q_ = 0, d_ = 0;
  std::vector<double> data_;
};

namespace detail {
inline void require_same_shape(const QPoint& t, const QPoint& s, const char* who) {
  if (!t.same_shape(s)) {
    std::ostringstream os;
    os << who << ": shape mismatch, (Q=" << t.q() << ",d=" << t.d() << ") vs (Q=" << s.q()
       << ",d=" << s.d() << ")";
    throw std::invalid_argument(os.str());
  }
}
}  // namespace detail

// Squared-distance cost matrix between the sheets of T and S.
inline std::vector<double> sheet_cost_matrix(const QPoint& t, const QPoint& s) {
  const int q = t.q(), d = t.d();
  std::vector<double> cost(static_cast<std::size_t>(q) * q);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) {
      double c = 0.0;
      const double* ta = t.sheet(a);
      const double* sb = s.sheet(b);
      for (int i = 0; i < d; ++i) {
        const double u = ta[i] - sb[i];
        c += u * u;
      }
      cost[static_cast<std::size_t>(a) * q + b] = c;
    }
  return cost;
}

// Optimal sheet matching realizing the G distance; ties broken toward the
// lexicographically smallest permutation.
inline Perm optimal_matching(const QPoint& t, const QPoint& s, double* cost_out = nullptr) {
  detail::require_same_shape(t, s, "optimal_matching");
  const auto cost = sheet_cost_matrix(t, s);
  Perm sigma;
  const double c = solve_assignment_lex(cost, t.q(), sigma);
  if (cost_out) *cost_out = c;
  return sigma;
}

inline double g_distance2(const QPoint& t, const QPoint& s) {
  detail::require_same_shape(t, s, "g_distance");
  const auto cost = sheet_cost_matrix(t, s);
  Perm sigma;
  return solve_assignment(cost, t.q(), sigma);
}

// The metric G of Def. "distance between Q-points": min over permutations of
// the root-sum-square of sheet differences, solved exactly.
inline double g_distance(const QPoint& t, const QPoint& s) {
  return std::sqrt(std::max(0.0, g_distance2(t, s)));
}

// |T| = G(T, Q[[0]]); any matching against the zero point has equal cost.
inline double g_norm2(const QPoint& t) {
  double s = 0.0;
  for (int l = 0; l < t.q(); ++l) {
    const double* p = t.sheet(l);
    for (int i = 0; i < t.d(); ++i) s += p[i] * p[i];
  }
  return s;
}

inline double g_norm(const QPoint& t) { return std::sqrt(g_norm2(t)); }

// Center of mass eta(T) = (1/Q) sum of sheets.
inline Vec eta_mean(const QPoint& t) {
  Vec mu(t.d(), 0.0);
  for (int l = 0; l < t.q(); ++l) {
    const double* p = t.sheet(l);
    for (int i = 0; i < t.d(); ++i) mu[i] += p[i];
  }
  for (double& x : mu) x /= t.q();
  return mu;
}

struct SpreadStats {
  double diameter = 0.0;
  double separation = kInf;    // min pairwise distance among tau-distinct sheets
  int support_cardinality = 1; // number of tau-distinct sheet values
};

// Diameter / separation / support cardinality of the sheet multiset, with
// coincidence decided at absolute tolerance tau.
inline SpreadStats spread_stats(const QPoint& t, double tau = kCoincidenceTol) {
  const int q = t.q();
  SpreadStats st;
  std::vector<int> cluster(q);
  std::iota(cluster.begin(), cluster.end(), 0);
  // union-find on tau-coincident sheets
  std::vector<int> parent(q);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int a = 0; a < q; ++a)
    for (int b = a + 1; b < q; ++b) {
      const double dab = std::sqrt(dist2(t.sheet_vec(a), t.sheet_vec(b)));
      st.diameter = std::max(st.diameter, dab);
      if (dab <= tau) {
        parent[find(a)] = find(b);
      } else {
        st.separation = std::min(st.separation, dab);
      }
    }
  std::vector<int> roots;
  for (int a = 0; a < q; ++a) {
    const int r = find(a);
    if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
  }
  st.support_cardinality = static_cast<int>(roots.size());
  return st;
}

// Sheet-wise orthogonal projection onto span(basis); the basis must be
// orthonormal. Idempotent, and 1-Lipschitz for the G distance.
inline QPoint fiber_project(const QPoint& t, const std::vector<Vec>& basis,
                            double ortho_tol = 1e-10) {
  double max_dev = 0.0;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    if (static_cast<int>(basis[a].size()) != t.d())
      throw std::invalid_argument("fiber_project: basis dimension mismatch");
    for (std::size_t b = 0; b <= a; ++b) {
      const double g = dot(basis[a], basis[b]) - (a == b ? 1.0 : 0.0);
      max_dev = std::max(max_dev, std::abs(g));
    }
  }
  if (max_dev > ortho_tol) {
    std::ostringstream os;
    os << "fiber_project: basis not orthonormal, max Gram deviation " << max_dev;
    throw std::invalid_argument(os.str());
  }
  QPoint out(t.q(), t.d());
  for (int l = 0; l < t.q(); ++l) {
    const Vec p = t.sheet_vec(l);
    Vec r(t.d(), 0.0);
    for (const Vec& nu : basis) axpy(dot(p, nu), nu, r);
    out.set_sheet(l, r);
  }
  return out;
}

// Flat serialization: "Q d  x x x ..." with sheets in canonical order.
inline std::string qpoint_to_string(const QPoint& t) {
  const QPoint c = t.canonical();
  std::ostringstream os;
  os.precision(17);
  os << c.q() << " " << c.d();
  for (double x : c.raw()) os << " " << x;
  return os.str();
}

inline QPoint qpoint_from_string(const std::string& s) {
  std::istringstream is(s);
  int q = 0, d = 0;
  if (!(is >> q >> d)) throw std::invalid_argument("qpoint_from_string: bad header");
  QPoint t(q, d);
  for (double& x : t.raw())
    if (!(is >> x)) throw std::invalid_argument("qpoint_from_string: truncated data");
  return t;
}

}  // namespace qjacobi
