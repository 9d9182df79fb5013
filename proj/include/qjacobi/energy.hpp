#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "qjacobi/qfield.hpp"

namespace qjacobi {

enum class DirFlavor { Full, TangentM, Normal };

namespace detail {

struct CellFrame {
  Vec e1, e2;          // ambient edge vectors from the anchor vertex
  Vec E1, E2;          // ONB of the simplex plane
  double b11, b12, b22;
  Vec mid;             // cell midpoint projected to Sigma
  double area;
};

inline CellFrame cell_frame(const Mesh& mesh, const std::array<int, 3>& v) {
  CellFrame f;
  const Vec &x0 = mesh.pos[v[0]], &x1 = mesh.pos[v[1]], &x2 = mesh.pos[v[2]];
  f.e1 = x1 - x0;
  f.e2 = x2 - x0;
  f.b11 = norm(f.e1);
  f.E1 = (1.0 / f.b11) * f.e1;
  f.b12 = dot(f.e2, f.E1);
  Vec r = f.e2;
  axpy(-f.b12, f.E1, r);
  f.b22 = norm(r);
  f.E2 = (1.0 / f.b22) * r;
  Vec mid(x0.size(), 0.0);
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = (x0[i] + x1[i] + x2[i]) / 3.0;
  if (!mesh.scene.flat()) {
    const double n = norm(mid);
    for (double& t : mid) t /= n;
  }
  f.mid = mid;
  return f;
}

// Gradient columns (along E1, E2) of the affine selection through the three
// matched sheet values p0, p1, p2.
inline void sheet_gradient(const CellFrame& f, const Vec& p0, const Vec& p1, const Vec& p2,
                           Vec& g1, Vec& g2) {
  const std::size_t d = p0.size();
  g1.assign(d, 0.0);
  g2.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double d1 = p1[i] - p0[i];
    const double d2 = p2[i] - p0[i];
    g1[i] = d1 / f.b11;
    g2[i] = (d2 - f.b12 * g1[i]) / f.b22;
  }
}

inline const std::vector<int>& all_cells(const Mesh& mesh, std::vector<int>& scratch,
                                         const std::vector<int>& region) {
  if (!region.empty()) return region;
  scratch.resize(mesh.nc());
  for (int c = 0; c < mesh.nc(); ++c) scratch[c] = c;
  return scratch;
}

}  // namespace detail

// L2 norm squared of the field over a region (exact for the piecewise affine
// interpolant; edge-midpoint quadrature, degree-2 exact).
inline double DiscreteQField::l2_norm2(const std::vector<int>& region) const {
  require_matchings("l2_norm2");
  const Mesh& mesh = *mesh_;
  std::vector<int> scratch;
  const auto& cells = detail::all_cells(mesh, scratch, region);
  std::vector<double> acc;
  acc.reserve(cells.size());
  for (int c : cells) {
    const auto sel = cell_selection(c);
    double s = 0.0;
    for (int l = 0; l < q_; ++l) {
      const Vec p0 = values_[sel.vertex[0]].sheet_vec(sel.rows[l][0]);
      const Vec p1 = values_[sel.vertex[1]].sheet_vec(sel.rows[l][1]);
      const Vec p2 = values_[sel.vertex[2]].sheet_vec(sel.rows[l][2]);
      for (int i = 0; i < d_; ++i) {
        const double m01 = 0.5 * (p0[i] + p1[i]);
        const double m12 = 0.5 * (p1[i] + p2[i]);
        const double m02 = 0.5 * (p0[i] + p2[i]);
        s += (m01 * m01 + m12 * m12 + m02 * m02) / 3.0;
      }
    }
    acc.push_back(s * mesh.cell_area[c]);
  }
  return pairwise_sum(acc);
}

// Dirichlet energy of the matched piecewise-affine selections; `flavor`
// projects sheet derivatives onto T M (TangentM) or onto the normal bundle
// of Sigma in M (Normal) before taking the Hilbert-Schmidt norm. Always
// Full >= TangentM >= Normal.
inline double dirichlet_energy(const DiscreteQField& u, DirFlavor flavor = DirFlavor::Full,
                               const std::vector<int>& region = {}) {
  u.require_matchings("dirichlet_energy");
  if (flavor != DirFlavor::Full) u.require_normal_section("dirichlet_energy(projected flavor)");
  const Mesh& mesh = u.mesh();
  std::vector<int> scratch;
  const auto& cells = detail::all_cells(mesh, scratch, region);
  std::vector<double> acc;
  acc.reserve(cells.size());
  Vec g1, g2;
  for (int c : cells) {
    const auto sel = u.cell_selection(c);
    const auto f = detail::cell_frame(mesh, sel.vertex);
    double s = 0.0;
    for (int l = 0; l < u.q(); ++l) {
      const Vec p0 = u.value(sel.vertex[0]).sheet_vec(sel.rows[l][0]);
      const Vec p1 = u.value(sel.vertex[1]).sheet_vec(sel.rows[l][1]);
      const Vec p2 = u.value(sel.vertex[2]).sheet_vec(sel.rows[l][2]);
      detail::sheet_gradient(f, p0, p1, p2, g1, g2);
      if (flavor == DirFlavor::Full) {
        s += norm2(g1) + norm2(g2);
      } else if (flavor == DirFlavor::TangentM) {
        s += norm2(mesh.scene.project_tangent_M(f.mid, g1)) +
             norm2(mesh.scene.project_tangent_M(f.mid, g2));
      } else {
        s += norm2(mesh.scene.project_normal_fiber(f.mid, g1)) +
             norm2(mesh.scene.project_normal_fiber(f.mid, g2));
      }
    }
    acc.push_back(s * mesh.cell_area[c]);
  }
  return pairwise_sum(acc);
}

// ---------------------------------------------------------------------------
// Jacobi (stability) functional.

struct JacBreakdown {
  double jac = 0.0;           // Dir^{N Sigma} - A term - Ricci term
  double jac_via_pert = 0.0;  // Dir - B
  double dir_normal = 0.0;
  double dir_tangent_m = 0.0;
  double dir_full = 0.0;
  double a_term = 0.0;        // int sum_l |A . N^l|^2
  double ricci_term = 0.0;    // int sum_l Ri(N^l, N^l)
  double b_value = 0.0;       // the perturbation functional B
  double identity_gap = 0.0;  // jac - jac_via_pert (roundoff only)
  double measured_c0 = 0.0;   // |B| / ||N||_{L2}^2
  double l2 = 0.0;
};

// Evaluates the stability functional both ways: (i) as the normal Dirichlet
// energy minus the second-fundamental-form and partial-Ricci quadratic terms,
// and (ii) as Dir - B. The two routes share one per-cell orthogonal
// decomposition of the sheet gradients, so the equivalence holds to roundoff.
inline JacBreakdown jac_energy(const DiscreteQField& u, const std::vector<int>& region = {}) {
  u.require_matchings("jac_energy");
  u.require_normal_section("jac_energy");
  const Mesh& mesh = u.mesh();
  const Scene& scene = mesh.scene;
  std::vector<int> scratch;
  const auto& cells = detail::all_cells(mesh, scratch, region);

  std::vector<double> acc_n, acc_t, acc_full, acc_out, acc_a, acc_ri;
  Vec g1, g2;
  for (int c : cells) {
    const auto sel = u.cell_selection(c);
    const auto f = detail::cell_frame(mesh, sel.vertex);
    double sn = 0.0, st = 0.0, sfull = 0.0, sout = 0.0, sa = 0.0, sri = 0.0;
    for (int l = 0; l < u.q(); ++l) {
      const Vec p0 = u.value(sel.vertex[0]).sheet_vec(sel.rows[l][0]);
      const Vec p1 = u.value(sel.vertex[1]).sheet_vec(sel.rows[l][1]);
      const Vec p2 = u.value(sel.vertex[2]).sheet_vec(sel.rows[l][2]);
      detail::sheet_gradient(f, p0, p1, p2, g1, g2);
      for (const Vec* g : {&g1, &g2}) {
        const Vec gn = scene.project_normal_fiber(f.mid, *g);
        const Vec gm = scene.project_tangent_M(f.mid, *g);
        const double nn = norm2(gn);
        const double tt = norm2(gm - gn);
        const double full = norm2(*g);
        sn += nn;
        st += tt;
        sfull += full;
        sout += std::max(0.0, full - nn - tt);
      }
      Vec pm(u.d(), 0.0);
      for (int i = 0; i < u.d(); ++i) pm[i] = (p0[i] + p1[i] + p2[i]) / 3.0;
      const Vec pmn = scene.project_normal_fiber(f.mid, pm);
      const auto sf = scene.second_form_contract(f.mid, pmn);
      sa += sf.a_dot_u_norm_sq;
      sri += scene.partial_ricci(f.mid, pmn, pmn);
    }
    const double w = mesh.cell_area[c];
    acc_n.push_back(sn * w);
    acc_t.push_back(st * w);
    acc_full.push_back(sfull * w);
    acc_out.push_back(sout * w);
    acc_a.push_back(sa * w);
    acc_ri.push_back(sri * w);
  }

  JacBreakdown out;
  out.dir_normal = pairwise_sum(acc_n);
  out.dir_tangent_m = out.dir_normal + pairwise_sum(acc_t);
  out.dir_full = pairwise_sum(acc_full);
  out.a_term = pairwise_sum(acc_a);
  out.ricci_term = pairwise_sum(acc_ri);
  const double tangential_part = pairwise_sum(acc_t);
  const double outward_part = pairwise_sum(acc_out);
  out.jac = out.dir_normal - out.a_term - out.ricci_term;
  out.b_value = outward_part + tangential_part + out.a_term + out.ricci_term;
  out.jac_via_pert = out.dir_full - out.b_value;
  out.identity_gap = out.jac - out.jac_via_pert;
  out.l2 = u.l2_norm2(region);
  out.measured_c0 = out.l2 > 0 ? std::abs(out.b_value) / out.l2 : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Push-forward mass (Q-valued area formula).

// Mass of the push-forward of the region under F_t^l(x) = exp_x(t N^l(x)),
// by per-cell quadrature of the matched-sheet Jacobians. Requires per-cell
// image orientation consistency; violation indicates t beyond the admissible
// range and raises.
inline double pushforward_mass(const DiscreteQField& u, double t,
                               const std::vector<int>& region = {}) {
  u.require_matchings("pushforward_mass");
  u.require_normal_section("pushforward_mass");
  const Mesh& mesh = u.mesh();
  const Scene& scene = mesh.scene;
  if (std::abs(t) * u.max_sheet_norm() >= scene.injectivity_radius())
    throw std::invalid_argument("pushforward_mass: |t| max|N| exceeds the injectivity bound");
  std::vector<int> scratch;
  const auto& cells = detail::all_cells(mesh, scratch, region);
  std::vector<double> acc;
  acc.reserve(cells.size());
  for (int c : cells) {
    const auto sel = u.cell_selection(c);
    const Vec &x0 = mesh.pos[sel.vertex[0]], &x1 = mesh.pos[sel.vertex[1]],
              &x2 = mesh.pos[sel.vertex[2]];
    const double src_area = detail::flat_triangle_area(x0, x1, x2);
    const Vec se1 = x1 - x0, se2 = x2 - x0;
    double s = 0.0;
    for (int l = 0; l < u.q(); ++l) {
      const Vec y0 = scene.exp_normal(x0, t * u.value(sel.vertex[0]).sheet_vec(sel.rows[l][0]));
      const Vec y1 = scene.exp_normal(x1, t * u.value(sel.vertex[1]).sheet_vec(sel.rows[l][1]));
      const Vec y2 = scene.exp_normal(x2, t * u.value(sel.vertex[2]).sheet_vec(sel.rows[l][2]));
      const double img_area = detail::flat_triangle_area(y0, y1, y2);
      const Vec ie1 = y1 - y0, ie2 = y2 - y0;
      const double m11 = dot(ie1, se1), m12 = dot(ie1, se2);
      const double m21 = dot(ie2, se1), m22 = dot(ie2, se2);
      if (m11 * m22 - m12 * m21 <= 0.0)
        throw std::runtime_error(
            "pushforward_mass: image cell loses orientation consistency (t too large)");
      s += img_area / src_area;
    }
    acc.push_back(s * mesh.cell_area[c]);
  }
  return pairwise_sum(acc);
}

// ---------------------------------------------------------------------------
// Finite-difference variations of the mass.

struct FdVariations {
  double delta1 = 0.0;  // ~ mu'(0)
  double delta2 = 0.0;  // ~ mu''(0)
  double t_step = 0.0;
};

// Central finite differences of t -> pushforward_mass(N, t) at 0 with one
// Richardson extrapolation step (O(t^4) truncation). On minimal scenes
// delta1 -> 0 and delta2 -> jac_energy(N) as t_step, h -> 0. Requires N
// compactly supported away from the boundary, or a closed Sigma.
inline FdVariations fd_variations(const DiscreteQField& u, double t_step = 0.0,
                                  const std::vector<int>& region = {}) {
  u.require_matchings("fd_variations");
  const Mesh& mesh = u.mesh();
  if (!mesh.closed) {
    for (int v = 0; v < mesh.nv(); ++v)
      if (mesh.boundary_vertex[v] && g_norm(u.value(v)) > 1e-12)
        throw std::invalid_argument(
            "fd_variations: field must vanish at the boundary (or Sigma closed)");
  }
  FdVariations out;
  const double mx = u.max_sheet_norm();
  if (mx == 0.0) return out;
  double s = (t_step > 0.0) ? t_step : 1e-2 / mx;
  if (2.0 * s * mx >= mesh.scene.injectivity_radius())
    throw std::invalid_argument("fd_variations: stencil leaves the injectivity range");
  const double mu0 = pushforward_mass(u, 0.0, region);
  auto mu = [&](double t) { return pushforward_mass(u, t, region); };
  const double mp1 = mu(s), mm1 = mu(-s);
  const double mph = mu(0.5 * s), mmh = mu(-0.5 * s);
  const double d1_s = (mp1 - mm1) / (2.0 * s);
  const double d1_h = (mph - mmh) / s;
  const double d2_s = (mp1 - 2.0 * mu0 + mm1) / (s * s);
  const double d2_h = (mph - 2.0 * mu0 + mmh) / (0.25 * s * s);
  out.delta1 = (4.0 * d1_h - d1_s) / 3.0;
  out.delta2 = (4.0 * d2_h - d2_s) / 3.0;
  out.t_step = s;
  return out;
}

// ---------------------------------------------------------------------------
// First-variation residuals (outer / inner).

// Outer test map psi(x, u), normal-fiber valued, with directional derivatives.
struct OuterVariationTest {
  std::function<Vec(const Vec& x, const Vec& u)> value;
  // derivative in x along an ambient direction `dir`, at frozen u
  std::function<Vec(const Vec& x, const Vec& u, const Vec& dir)> dx;
  // derivative in u applied to an increment w
  std::function<Vec(const Vec& x, const Vec& u, const Vec& w)> du;
};

struct ResidualReport {
  double lhs = 0.0;
  double rhs = 0.0;       // error terms (E_OV, or E_IV^(1)+E_IV^(2)+E_IV^(3))
  double residual = 0.0;  // lhs - rhs; vanishes for minimizers up to O(h^2)
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
};

// psi(x,u) = eta(x)^2 u for a scalar cutoff with gradient.
inline OuterVariationTest make_outer_eta2u(const std::function<double(const Vec&)>& eta,
                                           const std::function<Vec(const Vec&)>& grad_eta) {
  OuterVariationTest t;
  t.value = [eta](const Vec& x, const Vec& u) {
    const double e = eta(x);
    return e * e * u;
  };
  t.dx = [eta, grad_eta](const Vec& x, const Vec& u, const Vec& dir) {
    const double e = eta(x);
    const double de = dot(grad_eta(x), dir);
    return (2.0 * e * de) * u;
  };
  t.du = [eta](const Vec& x, const Vec&, const Vec& w) {
    const double e = eta(x);
    return e * e * w;
  };
  return t;
}

inline ResidualReport outer_variation_residual(const DiscreteQField& u,
                                               const OuterVariationTest& psi,
                                               const std::vector<int>& region = {}) {
  u.require_matchings("outer_variation_residual");
  u.require_normal_section("outer_variation_residual");
  const Mesh& mesh = u.mesh();
  const Scene& scene = mesh.scene;
  std::vector<int> scratch;
  const auto& cells = detail::all_cells(mesh, scratch, region);
  std::vector<double> acc_lhs, acc_rhs;
  Vec g1, g2;
  for (int c : cells) {
    const auto sel = u.cell_selection(c);
    const auto f = detail::cell_frame(mesh, sel.vertex);
    double lhs = 0.0, rhs = 0.0;
    for (int l = 0; l < u.q(); ++l) {
      const Vec p0 = u.value(sel.vertex[0]).sheet_vec(sel.rows[l][0]);
      const Vec p1 = u.value(sel.vertex[1]).sheet_vec(sel.rows[l][1]);
      const Vec p2 = u.value(sel.vertex[2]).sheet_vec(sel.rows[l][2]);
      detail::sheet_gradient(f, p0, p1, p2, g1, g2);
      Vec pm(u.d(), 0.0);
      for (int i = 0; i < u.d(); ++i) pm[i] = (p0[i] + p1[i] + p2[i]) / 3.0;
      const Vec* gs[2] = {&g1, &g2};
      const Vec* Es[2] = {&f.E1, &f.E2};
      for (int i = 0; i < 2; ++i) {
        const Vec gn = scene.project_normal_fiber(f.mid, *gs[i]);
        const Vec dpsi_x = scene.project_normal_fiber(f.mid, psi.dx(f.mid, pm, *Es[i]));
        const Vec dpsi_u = psi.du(f.mid, pm, *gs[i]);
        lhs += dot(gn, dpsi_x + dpsi_u);
      }
      // E_OV: <A.N : A.psi> + Ri(N, psi)
      const Vec psival = scene.project_normal_fiber(f.mid, psi.value(f.mid, pm));
      rhs += scene.partial_ricci(f.mid, pm, psival);
      // A vanishes for built-in scenes; keep the general contraction anyway:
      // <A.N : A.psi> would be assembled from scene.second_form here.
    }
    acc_lhs.push_back(lhs * mesh.cell_area[c]);
    acc_rhs.push_back(rhs * mesh.cell_area[c]);
  }
  ResidualReport rep;
  rep.lhs = pairwise_sum(acc_lhs);
  rep.rhs = pairwise_sum(acc_rhs);
  rep.residual = rep.lhs - rep.rhs;
  rep.e1 = rep.rhs;
  return rep;
}

// Inner variation along a tangent vector field X (ambient-valued callable,
// tangent to Sigma). Covariant derivatives of X are taken by centered
// differences along geodesics.
inline ResidualReport inner_variation_residual(const DiscreteQField& u,
                                               const std::function<Vec(const Vec&)>& X,
                                               const std::vector<int>& region = {}) {
  u.require_matchings("inner_variation_residual");
  u.require_normal_section("inner_variation_residual");
  const Mesh& mesh = u.mesh();
  const Scene& scene = mesh.scene;
  std::vector<int> scratch;
  const auto& cells = detail::all_cells(mesh, scratch, region);
  const double fd = 1e-5;
  std::vector<double> acc_lhs, acc_e1, acc_e2, acc_e3;
  Vec g1, g2;
  for (int c : cells) {
    const auto sel = u.cell_selection(c);
    const auto f = detail::cell_frame(mesh, sel.vertex);
    const Vec* Es[2] = {&f.E1, &f.E2};
    // covariant Jacobian S_ji = <nabla_{E_i} X, E_j> and divergence
    double S[2][2];
    for (int i = 0; i < 2; ++i) {
      const Vec xp = scene.exp_sigma(f.mid, fd * (*Es[i]));
      const Vec xm = scene.exp_sigma(f.mid, (-fd) * (*Es[i]));
      const Vec dX = (1.0 / (2.0 * fd)) * (X(xp) - X(xm));
      for (int j = 0; j < 2; ++j) S[j][i] = dot(dX, *Es[j]);
    }
    const double divX = S[0][0] + S[1][1];
    const Vec Xmid = X(f.mid);

    double lhs = 0.0, e1 = 0.0, e2 = 0.0, e3 = 0.0;
    for (int l = 0; l < u.q(); ++l) {
      const Vec p0 = u.value(sel.vertex[0]).sheet_vec(sel.rows[l][0]);
      const Vec p1 = u.value(sel.vertex[1]).sheet_vec(sel.rows[l][1]);
      const Vec p2 = u.value(sel.vertex[2]).sheet_vec(sel.rows[l][2]);
      detail::sheet_gradient(f, p0, p1, p2, g1, g2);
      const Vec gn1 = scene.project_normal_fiber(f.mid, g1);
      const Vec gn2 = scene.project_normal_fiber(f.mid, g2);
      const Vec* gn[2] = {&gn1, &gn2};
      const double en = norm2(gn1) + norm2(gn2);
      double contr = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) contr += S[j][i] * dot(*gn[i], *gn[j]);
      lhs += -en * divX + 2.0 * contr;

      Vec pm(u.d(), 0.0);
      for (int i = 0; i < u.d(); ++i) pm[i] = (p0[i] + p1[i] + p2[i]) / 3.0;
      // nabla^perp_X N from the cell gradient
      Vec gX(u.d(), 0.0);
      axpy(dot(Xmid, f.E1), gn1, gX);
      axpy(dot(Xmid, f.E2), gn2, gX);
      // E_IV^(1): Abar contractions (vanish when Abar(xi, normal) = 0)
      for (int i = 0; i < 2; ++i) {
        const Vec a_xi_n = scene.ambient_second_form(f.mid, *Es[i], pm);
        const Vec a_X_gn = scene.ambient_second_form(f.mid, Xmid, *gn[i]);
        const Vec a_X_n = scene.ambient_second_form(f.mid, Xmid, pm);
        const Vec a_xi_gn = scene.ambient_second_form(f.mid, *Es[i], *gn[i]);
        e1 += 2.0 * (dot(a_xi_n, a_X_gn) - dot(a_X_n, a_xi_gn));
      }
      // E_IV^(2): A . N contraction (A = 0 for built-ins)
      // E_IV^(3): 2 Ri(N, nabla^perp_X N)
      e3 += 2.0 * scene.partial_ricci(f.mid, pm, gX);
    }
    acc_lhs.push_back(lhs * mesh.cell_area[c]);
    acc_e1.push_back(e1 * mesh.cell_area[c]);
    acc_e2.push_back(e2 * mesh.cell_area[c]);
    acc_e3.push_back(e3 * mesh.cell_area[c]);
  }
  ResidualReport rep;
  rep.lhs = pairwise_sum(acc_lhs);
  rep.e1 = pairwise_sum(acc_e1);
  rep.e2 = pairwise_sum(acc_e2);
  rep.e3 = pairwise_sum(acc_e3);
  rep.rhs = rep.e1 + rep.e2 + rep.e3;
  rep.residual = rep.lhs - rep.rhs;
  return rep;
}

}  // namespace qjacobi
