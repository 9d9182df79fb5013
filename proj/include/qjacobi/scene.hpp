#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qjacobi/core.hpp"
#include "qjacobi/qpoint.hpp"

namespace qjacobi {

// Analytic ambient geometry: a manifold M inside R^d containing a minimal
// submanifold Sigma of dimension m and codimension k in M. Two built-ins:
//
//   flat_disk(m, k, K):        Sigma = R^m x {0},  M = R^{m+k} x {0},  d = m+k+K.
//                              Everything flat; A, Abar, R vanish identically.
//
//   equatorial_sphere(m):      Sigma = S^m = equator of M = S^{m+1} in R^{m+2}.
//                              Totally geodesic (A = 0); Abar(X,Y) = -<X,Y> x;
//                              R(X,Y)Z = <Y,Z>X - <X,Z>Y (unit round sphere).
//
// The chart is the identity on flat scenes and geodesic normal coordinates
// around the pole e_{m+1} on the sphere; in both cases the geodesic radius
// from the pole of a chart point y is exactly |y|.
class Scene {
 public:
  enum class Kind { Flat, EquatorialSphere };

  static Scene flat_disk(int m, int k, int trailing = 0) {
    if (m < 1 || m > 3 || k < 1 || trailing < 0)
      throw std::invalid_argument("flat_disk: need m in {1,2,3}, k >= 1, K >= 0");
    Scene s;
    s.kind_ = Kind::Flat;
    s.m_ = m;
    s.k_ = k;
    s.cap_ = trailing;
    s.d_ = m + k + trailing;
    std::ostringstream os;
    os << "flat_disk(m=" << m << ",k=" << k << ",K=" << trailing << ")";
    s.name_ = os.str();
    return s;
  }

  static Scene equatorial_sphere(int m) {
    if (m < 1) throw std::invalid_argument("equatorial_sphere: need m >= 1");
    Scene s;
    s.kind_ = Kind::EquatorialSphere;
    s.m_ = m;
    s.k_ = 1;
    s.cap_ = 0;
    s.d_ = m + 2;
    std::ostringstream os;
    os << "equatorial_sphere(m=" << m << ")";
    s.name_ = os.str();
    return s;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  int d() const { return d_; }        // ambient dimension
  int m() const { return m_; }        // dim Sigma
  int k() const { return k_; }        // codim of Sigma in M
  bool flat() const { return kind_ == Kind::Flat; }

  double injectivity_radius() const { return flat() ? kInf : kPi; }

  // ----- chart -----------------------------------------------------------

  // chart: B_inj subset of R^m -> Sigma subset of R^d.
  Vec chart(const Vec& y) const {
    check_chart_dim(y);
    Vec x(d_, 0.0);
    if (flat()) {
      for (int i = 0; i < m_; ++i) x[i] = y[i];
      return x;
    }
    const double r = norm(y);
    if (r >= kPi) throw std::invalid_argument("chart: |y| exceeds injectivity radius pi");
    if (r < 1e-300) {
      x[m_] = 1.0;  // pole e_{m+1}
      return x;
    }
    const double c = std::cos(r), s = std::sin(r);
    for (int i = 0; i < m_; ++i) x[i] = s * y[i] / r;
    x[m_] = c;
    return x;
  }

  Vec chart_inverse(const Vec& x) const {
    if (static_cast<int>(x.size()) != d_)
      throw std::invalid_argument("chart_inverse: ambient dimension mismatch");
    Vec y(m_, 0.0);
    if (flat()) {
      for (int i = 0; i < m_; ++i) y[i] = x[i];
      return y;
    }
    double c = std::min(1.0, std::max(-1.0, x[m_]));
    const double r = std::acos(c);
    double sn = 0.0;
    for (int i = 0; i < m_; ++i) sn += x[i] * x[i];
    sn = std::sqrt(sn);
    if (sn < 1e-300) return y;  // pole (or antipode, outside the chart)
    for (int i = 0; i < m_; ++i) y[i] = r * x[i] / sn;
    return y;
  }

  // Area element of Sigma in chart coordinates (geodesic polar factor).
  double chart_density(const Vec& y) const {
    if (flat()) return 1.0;
    const double r = norm(y);
    if (r < 1e-12) return 1.0;
    return std::pow(std::sin(r) / r, m_ - 1);
  }

  // Geodesic radius from the pole of a chart point is |y| for both charts.
  double geodesic_distance(const Vec& xa, const Vec& xb) const {
    if (flat()) {
      double s = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double t = xa[i] - xb[i];
        s += t * t;
      }
      return std::sqrt(s);
    }
    double c = 0.0;
    for (int i = 0; i < d_; ++i) c += xa[i] * xb[i];
    return std::acos(std::min(1.0, std::max(-1.0, c)));
  }

  // ----- frames -----------------------------------------------------------

  // Orthonormal tangent frame of Sigma at an ambient point x on Sigma.
  std::vector<Vec> tangent_frame(const Vec& x) const {
    std::vector<Vec> xi(m_, Vec(d_, 0.0));
    if (flat()) {
      for (int i = 0; i < m_; ++i) xi[i][i] = 1.0;
      return xi;
    }
    // T_x Sigma = orthogonal complement of {x, e_{m+2}} restricted to the
    // first m+1 coordinates: Gram-Schmidt of the standard basis against x.
    int filled = 0;
    for (int i = 0; i <= m_ && filled < m_; ++i) {
      Vec v(d_, 0.0);
      v[i] = 1.0;
      // remove components along x and along previous frame vectors
      double xc = 0.0;
      for (int j = 0; j < d_; ++j) xc += v[j] * x[j];
      for (int j = 0; j < d_; ++j) v[j] -= xc * x[j];
      for (int a = 0; a < filled; ++a) {
        const double c = dot(v, xi[a]);
        for (int j = 0; j < d_; ++j) v[j] -= c * xi[a][j];
      }
      const double n = norm(v);
      if (n > 1e-8) {
        for (double& t : v) t /= n;
        xi[filled++] = v;
      }
    }
    if (filled != m_) throw std::runtime_error("tangent_frame: degenerate point");
    return xi;
  }

  // Orthonormal frame of the normal bundle of Sigma in M at x.
  std::vector<Vec> normal_frame(const Vec& x) const {
    (void)x;
    std::vector<Vec> nu(k_, Vec(d_, 0.0));
    if (flat()) {
      for (int b = 0; b < k_; ++b) nu[b][m_ + b] = 1.0;
      return nu;
    }
    nu[0][m_ + 1] = 1.0;  // e_{m+2}, constant along the equator
    return nu;
  }

  bool normal_frame_constant() const { return true; }  // both built-ins

  // Projection of an ambient vector onto T_x M.
  Vec project_tangent_M(const Vec& x, const Vec& v) const {
    Vec r(d_, 0.0);
    if (flat()) {
      for (int i = 0; i < m_ + k_; ++i) r[i] = v[i];
      return r;
    }
    const double c = dot(x, v);
    for (int i = 0; i < d_; ++i) r[i] = v[i] - c * x[i];
    return r;
  }

  // Projection onto the normal fiber T_x^perp Sigma (inside T_x M).
  Vec project_normal_fiber(const Vec& x, const Vec& v) const {
    Vec r(d_, 0.0);
    const auto nu = normal_frame(x);
    for (const Vec& n : nu) axpy(dot(v, n), n, r);
    return r;
  }

  // ----- curvature --------------------------------------------------------

  // Second fundamental form A of Sigma in M applied to tangent vectors X, Y.
  // Identically zero for both built-ins (flat; totally geodesic equator).
  Vec second_form(const Vec& x, const Vec& X, const Vec& Y) const {
    (void)x;
    (void)X;
    (void)Y;
    return Vec(d_, 0.0);
  }

  // Second fundamental form Abar of M in R^d applied to X, Y in T_x M.
  Vec ambient_second_form(const Vec& x, const Vec& X, const Vec& Y) const {
    Vec r(d_, 0.0);
    if (flat()) return r;
    const double c = dot(X, Y);
    for (int i = 0; i < d_; ++i) r[i] = -c * x[i];
    return r;
  }

  // Curvature endomorphism R(X,Y)Z of M.
  Vec curvature(const Vec& x, const Vec& X, const Vec& Y, const Vec& Z) const {
    Vec r(d_, 0.0);
    if (flat()) return r;
    (void)x;
    const double yz = dot(Y, Z), xz = dot(X, Z);
    for (int i = 0; i < d_; ++i) r[i] = yz * X[i] - xz * Y[i];
    return r;
  }

  // Partial Ricci curvature Ri(u,v) = sum_i <R(u, xi_i) xi_i, v> over a
  // tangent frame; symmetric in (u, v). u and v must lie in the normal fiber.
  double partial_ricci(const Vec& x, const Vec& u, const Vec& v,
                       double fiber_tol = 1e-8) const {
    check_in_fiber(x, u, fiber_tol, "partial_ricci");
    check_in_fiber(x, v, fiber_tol, "partial_ricci");
    if (flat()) return 0.0;
    // Unit round sphere: <R(u,xi)xi,v> = <xi,xi><u,v> - <u,xi><xi,v>;
    // summed over an orthonormal tangent frame this is m<u,v> exactly
    // (u, v are orthogonal to T_x Sigma).
    return m_ * dot(u, v);
  }

  struct SecondFormContraction {
    double a_dot_u_norm_sq = 0.0;      // sum_{ij} <A(xi_i,xi_j), u>^2
    std::vector<double> abar_energy_row;  // |Abar(xi_i, u)|^2 for i = 1..m
  };

  SecondFormContraction second_form_contract(const Vec& x, const Vec& u,
                                             double fiber_tol = 1e-8) const {
    check_in_fiber(x, u, fiber_tol, "second_form_contract");
    SecondFormContraction out;
    out.abar_energy_row.assign(m_, 0.0);
    if (flat()) return out;
    const auto xi = tangent_frame(x);
    for (int i = 0; i < m_; ++i) {
      const Vec a = ambient_second_form(x, xi[i], u);  // = -<xi_i,u> x = 0 here
      out.abar_energy_row[i] = norm2(a);
    }
    // A vanishes identically: a_dot_u_norm_sq stays 0.
    return out;
  }

  // Sup norms of A, Abar and the partial curvature, the constants the paper
  // keeps symbolic; audits report measured values against these.
  double sup_A() const { return 0.0; }
  double sup_Abar() const { return flat() ? 0.0 : 1.0; }
  double sup_R() const { return flat() ? 0.0 : 1.0; }

  // Upper bound for |B(u)| / ||u||_{L^2}^2 obtained from the closed forms:
  // sum_i |Abar(xi_i,u)|^2 + 2 sum |<A,u>|^2 + Ri(u,u) <= C0 |u|^2.
  double stability_shift_bound() const { return flat() ? 0.0 : static_cast<double>(m_); }

  // ----- exponentials -----------------------------------------------------

  // Geodesic exponential on Sigma: x on Sigma, v tangent to Sigma at x.
  Vec exp_sigma(const Vec& x, const Vec& v) const {
    check_exp_radius(norm(v));
    if (flat()) return x + v;
    const double r = norm(v);
    if (r < 1e-300) return x;
    Vec out(d_, 0.0);
    const double c = std::cos(r), s = std::sin(r);
    for (int i = 0; i < d_; ++i) out[i] = c * x[i] + s * v[i] / r;
    return out;
  }

  // Normal exponential in M: x on Sigma, w in the normal fiber at x.
  Vec exp_normal(const Vec& x, const Vec& w) const {
    check_exp_radius(norm(w));
    if (flat()) return x + w;
    const double r = norm(w);
    if (r < 1e-300) return x;
    Vec out(d_, 0.0);
    const double c = std::cos(r), s = std::sin(r);
    for (int i = 0; i < d_; ++i) out[i] = c * x[i] + s * w[i] / r;
    return out;
  }

  // Closed-form area of the geodesic ball of radius r around any point.
  double geodesic_ball_area(double r) const {
    if (m_ == 1) return 2.0 * r;
    if (m_ == 2) return flat() ? kPi * r * r : 2.0 * kPi * (1.0 - std::cos(r));
    if (m_ == 3 && flat()) return 4.0 * kPi * r * r * r / 3.0;
    throw std::runtime_error("geodesic_ball_area: unsupported dimension");
  }

  double total_area() const {
    if (flat()) return kInf;
    if (m_ == 2) return 4.0 * kPi;                      // S^2
    if (m_ == 1) return 2.0 * kPi;                      // S^1
    throw std::runtime_error("total_area: unsupported dimension");
  }

 private:
  void check_chart_dim(const Vec& y) const {
    if (static_cast<int>(y.size()) != m_)
      throw std::invalid_argument("chart: expected a point of R^m");
  }
  void check_exp_radius(double r) const {
    if (r >= injectivity_radius()) {
      std::ostringstream os;
      os << "exponential: radius " << r << " exceeds injectivity bound " << injectivity_radius();
      throw std::invalid_argument(os.str());
    }
  }
  void check_in_fiber(const Vec& x, const Vec& u, double tol, const char* who) const {
    const Vec p = project_normal_fiber(x, u);
    double dev = 0.0;
    for (int i = 0; i < d_; ++i) dev = std::max(dev, std::abs(p[i] - u[i]));
    if (dev > tol * (1.0 + norm(u))) {
      std::ostringstream os;
      os << who << ": vector off the normal fiber by " << dev;
      throw std::invalid_argument(os.str());
    }
  }

  Kind kind_ = Kind::Flat;
  std::string name_;
  int d_ = 0, m_ = 0, k_ = 0, cap_ = 0;
};

// Construct a built-in scene by name with a key-value parameter map.
inline Scene builtin_scene(const std::string& name, const std::map<std::string, double>& params) {
  auto get = [&](const char* key, double dflt, bool required = false) {
    auto it = params.find(key);
    if (it == params.end()) {
      if (required) throw std::invalid_argument(std::string("builtin_scene: missing param ") + key);
      return dflt;
    }
    return it->second;
  };
  if (name == "flat_disk") {
    const int m = static_cast<int>(get("m", 2));
    const int k = static_cast<int>(get("k", 1));
    const int K = static_cast<int>(get("K", 0));
    return Scene::flat_disk(m, k, K);
  }
  if (name == "equatorial_sphere") {
    const int m = static_cast<int>(get("m", 2));
    return Scene::equatorial_sphere(m);
  }
  throw std::invalid_argument("builtin_scene: unknown scene '" + name + "'");
}

inline std::vector<std::string> builtin_scene_names() {
  return {"flat_disk", "equatorial_sphere"};
}

}  // namespace qjacobi
