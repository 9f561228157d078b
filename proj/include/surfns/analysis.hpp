#pragma once
// Error measures against the exact solution, EOC tables and standing property checks.
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "surfns/solver.hpp"

namespace surfns {

// Neumaier compensated sum
struct CompensatedSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

// L² norms over Γ_h^n at one time level
struct StepErrors {
  double ah = 0, h1 = 0, l2 = 0, Pl2 = 0, n = 0, div = 0, p = 0;
  double lam_l2 = 0, lam_hm1 = 0;
  bool has_lambda = false;
};

struct ErrorOptions {
  bool penalty_normal = false;  // measure u_h·ñ_h instead of u_h·n_h − V
  bool lambda_errors = true;
  bool lambda_dual = true;
};

inline StepErrors step_errors(const FormContext& c, const ExactSolution& ex, const StepState& st,
                              const ErrorOptions& opt = {}) {
  const double t = c.mesh->t;
  CompensatedSum ah, h1, l2, Pl2, nn, dv, pd, area;
  const size_t nq = c.geo.size();
  std::vector<double> pdiff(nq);
  bool has_p = st.p.size() > 0;
  for (int e = 0; e < c.nelem(); ++e)
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      const GeoSample& g = c.geo[i];
      const double w = c.w[i];
      ExactValue ev = ex.lifted(g.x, t);
      Mat3 gex = ev.grad * g.P;
      Vec3 uh = c.vel_value(st.u, e, q);
      Mat3 gh = c.vel_grad(st.u, e, q);
      Mat3 dg = gex - gh;
      Vec3 du = ev.u - uh;
      ah.add(w * (g.P * dg).squaredNorm());
      h1.add(w * dg.squaredNorm());
      l2.add(w * du.squaredNorm());
      Pl2.add(w * (g.P * du).squaredNorm());
      double en;
      if (opt.penalty_normal) {
        en = uh.dot(c.mesh->improved_normal(g.x));
      } else {
        Vec3 y = c.mesh->surface.closest_point(g.x, t);
        en = uh.dot(g.n) - ex.solution_normal_speed(y, t);
      }
      nn.add(w * en * en);
      double dd = dg.trace();
      dv.add(w * dd * dd);
      if (has_p) {
        pdiff[i] = ev.p - c.scalar_value(Field::Pressure, st.p, e, q);
        pd.add(w * pdiff[i]);
      }
      area.add(w);
    }
  StepErrors r;
  r.ah = std::sqrt(ah.value());
  r.h1 = std::sqrt(h1.value());
  r.l2 = std::sqrt(l2.value());
  r.Pl2 = std::sqrt(Pl2.value());
  r.n = std::sqrt(nn.value());
  r.div = std::sqrt(dv.value());
  if (has_p) {
    double mean = pd.value() / area.value();
    CompensatedSum pe;
    for (size_t i = 0; i < nq; ++i) pe.add(c.w[i] * (pdiff[i] - mean) * (pdiff[i] - mean));
    r.p = std::sqrt(pe.value());
  }
  // the exact multiplier is zero for the manufactured solutions
  if (opt.lambda_errors && st.l.size() > 0) {
    r.has_lambda = true;
    CompensatedSum ll;
    for (int e = 0; e < c.nelem(); ++e)
      for (int q = 0; q < c.nquad(); ++q) {
        double v = c.scalar_value(Field::Multiplier, st.l, e, q);
        ll.add(c.w[c.idx(e, q)] * v * v);
      }
    r.lam_l2 = std::sqrt(ll.value());
    if (opt.lambda_dual) r.lam_hm1 = h1_dual_norm(c, Field::Multiplier, st.l);
  }
  return r;
}

// Time norms: L² by the rectangle rule over n ≥ 1, L∞ over n ≥ 0.
struct ErrorReport {
  double e_u_ah = 0, e_u_h1 = 0, e_u_linf_l2 = 0, e_Pu_linf_l2 = 0, e_n_linf_l2 = 0, e_div_linf_l2 = 0,
         e_p_l2l2 = 0, e_l_l2l2 = 0, e_l_hm1 = 0;
  bool has_lambda = false;
  CompensatedSum s_ah, s_h1, s_p, s_l, s_lh;

  void add(const StepErrors& e, double dt, bool initial) {
    e_u_linf_l2 = std::max(e_u_linf_l2, e.l2);
    e_Pu_linf_l2 = std::max(e_Pu_linf_l2, e.Pl2);
    e_n_linf_l2 = std::max(e_n_linf_l2, e.n);
    e_div_linf_l2 = std::max(e_div_linf_l2, e.div);
    if (initial) return;
    s_ah.add(dt * e.ah * e.ah);
    s_h1.add(dt * e.h1 * e.h1);
    s_p.add(dt * e.p * e.p);
    if (e.has_lambda) {
      has_lambda = true;
      s_l.add(dt * e.lam_l2 * e.lam_l2);
      s_lh.add(dt * e.lam_hm1 * e.lam_hm1);
    }
    e_u_ah = std::sqrt(s_ah.value());
    e_u_h1 = std::sqrt(s_h1.value());
    e_p_l2l2 = std::sqrt(s_p.value());
    e_l_l2l2 = std::sqrt(s_l.value());
    e_l_hm1 = std::sqrt(s_lh.value());
  }
  std::vector<double> values() const {
    std::vector<double> v{e_u_ah, e_u_h1, e_u_linf_l2, e_Pu_linf_l2, e_n_linf_l2, e_div_linf_l2, e_p_l2l2};
    if (has_lambda) {
      v.push_back(e_l_l2l2);
      v.push_back(e_l_hm1);
    }
    return v;
  }
  static std::vector<std::string> names(bool lambda) {
    std::vector<std::string> n{"e_u_ah", "e_u_h1", "e_u_linf_l2", "e_Pu_linf_l2", "e_n_linf_l2", "e_div_linf_l2",
                               "e_p_l2l2"};
    if (lambda) {
      n.push_back("e_l_l2l2");
      n.push_back("e_l_hm1");
    }
    return n;
  }
};

// rate_i = log(e_i/e_{i+1}) / log(h_i/h_{i+1})
inline std::vector<double> eoc(const std::vector<double>& e, const std::vector<double>& h) {
  if (e.size() != h.size() || e.size() < 2) throw std::invalid_argument("eoc: need two or more matching entries");
  std::vector<double> r;
  for (size_t i = 0; i + 1 < e.size(); ++i) {
    if (!(h[i + 1] < h[i])) throw std::invalid_argument("eoc: mesh sizes must decrease strictly");
    r.push_back(std::log(e[i] / e[i + 1]) / std::log(h[i] / h[i + 1]));
  }
  return r;
}

using FormAssembler = std::function<SpMat(const FormContext&)>;

// |d/dt(wᵀM v) by central differences − wᵀG(t)v|; G is injectable for mutation tests
inline double verify_transport(const SurfaceMesh& mesh, const TaylorHoodSpace& V, double t, const VecX& w,
                               const VecX& v, double delta, int quad_degree = -1,
                               const FormAssembler& g_form = assemble_g) {
  SurfaceMesh mp = mesh.evolve(t + delta), mm = mesh.evolve(t - delta), m0 = mesh.evolve(t);
  FormContext cp(mp, V, quad_degree), cm(mm, V, quad_degree), c0(m0, V, quad_degree);
  double dm = (w.dot(assemble_mass(cp) * v) - w.dot(assemble_mass(cm) * v)) / (2.0 * delta);
  return std::abs(dm - w.dot(g_form(c0) * v));
}

struct GeometryRow {
  int level = 0;
  double h = 0, normal_err = 0, area_err = 0, measure_err = 0;
};

// max ‖n − n_h‖, |area − |Γ||, and max |1 − dσ/dσ_h| over quadrature points
inline GeometryRow geometry_errors(const SurfaceMesh& m, int quad_degree = -1) {
  QuadratureRule q = quadrature(quad_degree < 0 ? 2 * m.kg + 4 : quad_degree);
  std::vector<BasisSample> bs;
  for (auto& p : q.points) bs.push_back(m.geo_basis().eval(p[0], p[1]));
  GeometryRow r;
  r.level = m.level;
  r.h = m.h_max();
  CompensatedSum area;
  const double R = m.surface.radius(m.t);
  V3<double> c = m.surface.center(m.t);
  Vec3 ctr(c[0], c[1], c[2]);
  for (int e = 0; e < m.num_elements(); ++e)
    for (int i = 0; i < q.size(); ++i) {
      GeoSample g = m.sample(e, bs[i]);
      area.add(q.weights[i] * g.meas);
      Vec3 n = m.surface.normal(g.x, m.t);
      r.normal_err = std::max(r.normal_err, (n - g.n).norm());
      double rho = (g.x - ctr).norm();
      double ratio = (R / rho) * (R / rho) * n.dot(g.n);
      r.measure_err = std::max(r.measure_err, std::abs(1.0 - ratio));
    }
  r.area_err = std::abs(area.value() - 4.0 * kPi * R * R);
  return r;
}

struct GeometryReport {
  std::vector<GeometryRow> rows;
  std::vector<double> normal_order, area_order, measure_order;
};

inline GeometryReport geometry_convergence_report(const AnalyticSurface& s, int kg, const std::vector<int>& levels,
                                                  double t = 0.0) {
  GeometryReport rep;
  for (int l : levels) rep.rows.push_back(geometry_errors(build_initial_mesh(s, l, kg).evolve(t)));
  if (rep.rows.size() >= 2) {
    std::vector<double> h, en, ea, em;
    for (auto& r : rep.rows) {
      h.push_back(r.h);
      en.push_back(r.normal_err);
      ea.push_back(r.area_err);
      em.push_back(r.measure_err);
    }
    rep.normal_order = eoc(en, h);
    rep.area_order = eoc(ea, h);
    rep.measure_order = eoc(em, h);
  }
  return rep;
}

}  // namespace surfns
