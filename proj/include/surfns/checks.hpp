#pragma once
// Standing property checks shared by the CLI `check` subcommand and the acceptance binary.
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "surfns/simulation.hpp"

namespace surfns {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

inline VecX random_vector(int n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = d(g);
  return v;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// max relative |C + Cᵀ| over the skew parts of both convective forms
inline CheckResult check_skew_symmetry(int level = 1, int kg = 2) {
  AnalyticSurface s(SurfaceKind::MovingSphere);
  SurfaceMesh m = build_initial_mesh(s, level, kg).evolve(0.7);
  TaylorHoodSpace V(m, 2, 1, 2, true);
  FormContext c(m, V);
  VecX z = random_vector(V.n_u(), 11);
  VecX eta = random_vector(V.vel.layout.num_nodes, 12);
  ConvParts skew{true, false};
  double worst = 0.0;
  for (const SpMat& C : {assemble_convective_dir(c, z, eta, skew), assemble_convective_cov(c, z, eta, eta, skew)}) {
    Eigen::MatrixXd D(C);
    worst = std::max(worst, max_abs(D + D.transpose()) / std::max(1.0, max_abs(D)));
  }
  return {"convective skew symmetry", worst <= 1e-12, worst, "max |C+C^T| / max|C|"};
}

namespace detail {

// Per-element dense reference assembly through fe evaluation of unit basis functions.
struct BruteForce {
  const SurfaceMesh& m;
  const TaylorHoodSpace& V;
  QuadratureRule rule;

  BruteForce(const SurfaceMesh& mesh, const TaylorHoodSpace& space, int degree)
      : m(mesh), V(space), rule(quadrature(degree)) {}

  std::vector<int> dofs(Field f, int e) const {
    const auto& L = V.layout(f);
    const int* en = L.layout.nodes_of(e);
    std::vector<int> d;
    for (int a = 0; a < L.nloc(); ++a) {
      if (f == Field::Velocity)
        for (int k = 0; k < 3; ++k) d.push_back(3 * en[a] + k);
      else
        d.push_back(en[a]);
    }
    return d;
  }
  FeSample unit(Field f, int dof, int e, double xi, double eta) const {
    FeFunction u(f, VecX::Zero(V.ndofs(f)));
    u.coeffs[dof] = 1.0;
    return eval(V, u, m, e, xi, eta);
  }
  // form(test, trial, geo, quad-point data) over all element pairs
  template <class F>
  Eigen::MatrixXd matrix(Field rf, Field cf, F form) const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(V.ndofs(rf), V.ndofs(cf));
    for (int e = 0; e < m.num_elements(); ++e) {
      auto rd = dofs(rf, e), cd = dofs(cf, e);
      for (int q = 0; q < rule.size(); ++q) {
        double xi = rule.points[q][0], eta = rule.points[q][1];
        GeoSample g = m.element_geometry(e, xi, eta);
        double w = rule.weights[q] * g.meas;
        std::vector<FeSample> rs, cs;
        for (int i : rd) rs.push_back(unit(rf, i, e, xi, eta));
        for (int j : cd) cs.push_back(unit(cf, j, e, xi, eta));
        for (size_t i = 0; i < rd.size(); ++i)
          for (size_t j = 0; j < cd.size(); ++j) A(rd[i], cd[j]) += w * form(rs[i], cs[j], g, e, xi, eta);
      }
    }
    return A;
  }
  template <class F>
  VecX vector(Field rf, F form) const {
    VecX b = VecX::Zero(V.ndofs(rf));
    for (int e = 0; e < m.num_elements(); ++e) {
      auto rd = dofs(rf, e);
      for (int q = 0; q < rule.size(); ++q) {
        double xi = rule.points[q][0], eta = rule.points[q][1];
        GeoSample g = m.element_geometry(e, xi, eta);
        for (size_t i = 0; i < rd.size(); ++i)
          b[rd[i]] += rule.weights[q] * g.meas * form(unit(rf, rd[i], e, xi, eta), g, e, xi, eta);
      }
    }
    return b;
  }
};

}  // namespace detail

// Every assembled block against a dense per-basis-function reference at level 0.
inline CheckResult check_block_equivalence(int kg = 2, int ku = 2, int kl = 2) {
  AnalyticSurface s(SurfaceKind::MovingSphere);
  SurfaceMesh m = build_initial_mesh(s, 0, kg).evolve(0.9);
  TaylorHoodSpace V(m, ku, ku - 1, kl, true);
  const int deg = 2 * ku + kg;
  FormContext c(m, V, deg);
  detail::BruteForce bf(m, V, deg);
  VecX z = random_vector(V.n_u(), 21);
  VecX e1 = random_vector(V.vel.layout.num_nodes, 22), e2 = random_vector(V.vel.layout.num_nodes, 23);
  VecX e1pack = VecX::Zero(V.n_u()), e2pack = VecX::Zero(V.n_u());
  for (int i = 0; i < V.vel.layout.num_nodes; ++i) {
    e1pack[3 * i] = e1[i];
    e2pack[3 * i] = e2[i];
  }
  auto at = [&](const VecX& coeffs, int e, double xi, double eta) {
    return eval(V, {Field::Velocity, coeffs}, m, e, xi, eta);
  };
  using FS = FeSample;
  using GS = GeoSample;
  const Field U = Field::Velocity, P = Field::Pressure, L = Field::Multiplier;
  struct Item {
    std::string name;
    Eigen::MatrixXd fast, ref;
  };
  std::vector<Item> items;
  items.push_back({"mass", Eigen::MatrixXd(assemble_mass(c)),
                   bf.matrix(U, U, [](const FS& v, const FS& u, const GS&, int, double, double) {
                     return v.value.dot(u.value);
                   })});
  items.push_back({"g", Eigen::MatrixXd(assemble_g(c)),
                   bf.matrix(U, U, [](const FS& v, const FS& u, const GS& g, int, double, double) {
                     return g.divW * v.value.dot(u.value);
                   })});
  items.push_back({"projected mass", Eigen::MatrixXd(assemble_projected_mass(c)),
                   bf.matrix(U, U, [](const FS& v, const FS& u, const GS& g, int, double, double) {
                     return u.value.dot(g.P * v.value);
                   })});
  items.push_back({"projected g", Eigen::MatrixXd(assemble_projected_g(c)),
                   bf.matrix(U, U, [](const FS& v, const FS& u, const GS& g, int, double, double) {
                     return g.divW * u.value.dot(g.P * v.value);
                   })});
  items.push_back({"strain", Eigen::MatrixXd(assemble_strain(c)),
                   bf.matrix(U, U, [](const FS& v, const FS& u, const GS&, int, double, double) {
                     return v.strain().cwiseProduct(u.strain()).sum();
                   })});
  items.push_back({"tangential strain", Eigen::MatrixXd(assemble_tangential_strain(c)),
                   bf.matrix(U, U, [](const FS& v, const FS& u, const GS& g, int, double, double) {
                     Mat3 Ev = v.strain() - v.value.dot(g.n) * g.H, Eu = u.strain() - u.value.dot(g.n) * g.H;
                     return Ev.cwiseProduct(Eu).sum();
                   })});
  items.push_back({"normal penalty", Eigen::MatrixXd(assemble_normal_penalty(c)),
                   bf.matrix(U, U, [&](const FS& v, const FS& u, const GS& g, int, double, double) {
                     Vec3 nt = s.normal(g.x, m.t);
                     return v.value.dot(nt) * u.value.dot(nt);
                   })});
  items.push_back({"b_p", Eigen::MatrixXd(assemble_bp(c)),
                   bf.matrix(P, U, [](const FS& q, const FS& u, const GS&, int, double, double) {
                     return u.value.dot(q.grad.row(0).transpose());
                   })});
  items.push_back({"b_div", Eigen::MatrixXd(assemble_bdiv(c)),
                   bf.matrix(P, U, [](const FS& q, const FS& u, const GS&, int, double, double) {
                     return q.value[0] * u.div();
                   })});
  items.push_back({"b_lambda", Eigen::MatrixXd(assemble_bl(c)),
                   bf.matrix(L, U, [](const FS& x, const FS& u, const GS& g, int, double, double) {
                     return x.value[0] * u.value.dot(g.n);
                   })});
  items.push_back({"convective dir", Eigen::MatrixXd(assemble_convective_dir(c, z, e2)),
                   bf.matrix(U, U, [&](const FS& v, const FS& u, const GS&, int e, double xi, double eta) {
                     Vec3 zq = at(z, e, xi, eta).value;
                     double h2 = at(e2pack, e, xi, eta).value[0];
                     return 0.5 * ((u.grad * zq).dot(v.value) - (v.grad * zq).dot(u.value)) -
                            0.5 * h2 * u.value.dot(v.value);
                   })});
  items.push_back({"convective cov", Eigen::MatrixXd(assemble_convective_cov(c, z, e1, e2)),
                   bf.matrix(U, U, [&](const FS& v, const FS& u, const GS& g, int e, double xi, double eta) {
                     Vec3 zq = at(z, e, xi, eta).value;
                     Vec3 Hz = g.H * zq;
                     double h1 = at(e1pack, e, xi, eta).value[0], h2 = at(e2pack, e, xi, eta).value[0];
                     return 0.5 * (v.value.dot(g.P * (u.grad * zq)) - u.value.dot(g.P * (v.grad * zq))) -
                            0.5 * v.value.dot(Hz) * u.value.dot(g.n) + 0.5 * v.value.dot(g.n) * u.value.dot(Hz) +
                            0.5 * h1 * v.value.dot(g.H * u.value) - 0.5 * h2 * v.value.dot(g.P * u.value);
                   })});
  for (Field f : {P, L}) {
    std::string nm = f == P ? "pressure" : "multiplier";
    items.push_back({nm + " mass", Eigen::MatrixXd(assemble_scalar_mass(c, f)),
                     bf.matrix(f, f, [](const FS& a, const FS& b, const GS&, int, double, double) {
                       return a.value[0] * b.value[0];
                     })});
    items.push_back({nm + " stiffness", Eigen::MatrixXd(assemble_scalar_stiffness(c, f)),
                     bf.matrix(f, f, [](const FS& a, const FS& b, const GS&, int, double, double) {
                       return a.grad.row(0).dot(b.grad.row(0));
                     })});
    items.push_back({nm + " mean", Eigen::MatrixXd(zero_mean_constraint(c, f)),
                     Eigen::MatrixXd(bf.vector(f, [](const FS& a, const GS&, int, double, double) {
                       return a.value[0];
                     }))});
    items.push_back({nm + " load", Eigen::MatrixXd(assemble_scalar_load(c, f, e1)),
                     Eigen::MatrixXd(bf.vector(f, [&](const FS& a, const GS&, int e, double xi, double eta) {
                       return a.value[0] * at(e1pack, e, xi, eta).value[0];
                     }))});
  }
  double worst = 0.0;
  std::string where;
  for (auto& it : items) {
    double d = max_abs(it.fast - it.ref) / std::max(1.0, max_abs(it.ref));
    if (where.empty() || d > worst) {
      worst = d;
      where = it.name;
    }
  }
  return {"block quadrature equivalence", worst <= 1e-12, worst,
          std::to_string(items.size()) + " blocks, worst: " + where};
}

// Richardson factor of the transport residual between δ=1e-3 and δ=1e-4.
inline CheckResult check_transport(const FormAssembler& g_form = assemble_g) {
  AnalyticSurface s(SurfaceKind::MovingSphere);
  SurfaceMesh m = build_initial_mesh(s, 1, 2);
  TaylorHoodSpace V(m, 2, 1, 2, true);
  VecX w = random_vector(V.n_u(), 31), v = random_vector(V.n_u(), 32);
  double r3 = verify_transport(m, V, 0.8, w, v, 1e-3, -1, g_form);
  double r4 = verify_transport(m, V, 0.8, w, v, 1e-4, -1, g_form);
  double factor = r3 / std::max(r4, 1e-300);
  char buf[128];
  std::snprintf(buf, sizeof buf, "residual %.3e (1e-3) vs %.3e (1e-4)", r3, r4);
  return {"transport Richardson factor", factor >= 50.0, factor, buf};
}

// A discretely divergence-free field (homogeneous constraints) near a smooth tangential flow.
inline VecX divergence_free_field(const FormContext& c, const ExactSolution& ex) {
  VecX w = interpolate_vector(*c.V, *c.mesh, [&](const Vec3& x) {
             Vec3 y = c.mesh->surface.closest_point(x, c.mesh->t);
             return ex.tangential_velocity(y, c.mesh->t);
           }).coeffs;
  return leray_time_projection(w, assemble_mass(c), c).u;
}

// Leray projection: identity on a stationary surface, O(Δt) proximity and L² stability when moving.
inline CheckResult check_leray() {
  ExactSolution ex;
  ex.fields = FieldSet::Benchmark;
  // identity
  ex.surface = AnalyticSurface(SurfaceKind::StationarySphere);
  SurfaceMesh ms = build_initial_mesh(ex.surface, 1, 2);
  TaylorHoodSpace Vs(ms, 2, 1, 2, true);
  FormContext cs(ms, Vs);
  VecX w = divergence_free_field(cs, ex);
  ProjectionResult id = leray_time_projection(w, assemble_mass(cs), cs);
  double ident = (id.u - w).cwiseAbs().maxCoeff() / std::max(1e-300, w.cwiseAbs().maxCoeff());

  // proximity on the moving sphere
  ex.surface = AnalyticSurface(SurfaceKind::MovingSphere);
  SurfaceMesh m0 = build_initial_mesh(ex.surface, 2, 2).evolve(0.5);
  TaylorHoodSpace V(m0, 2, 1, 2, true);
  FormContext c0(m0, V);
  VecX w0 = divergence_free_field(c0, ex);
  SpMat M0 = assemble_mass(c0);
  double n0 = std::sqrt(w0.dot(M0 * w0));
  std::vector<double> dts{0.2, 0.1, 0.05}, prox;
  double stab = 0.0;
  for (double dt : dts) {
    SurfaceMesh m1 = m0.evolve(0.5 + dt);
    FormContext c1(m1, V);
    SpMat M1 = assemble_mass(c1);
    ProjectionResult r = leray_time_projection(w0, M0, c1);
    VecX d = w0 - r.u;
    prox.push_back(std::sqrt(d.dot(M1 * d)));
    stab = std::max(stab, std::sqrt(r.u.dot(M1 * r.u)) / n0);
  }
  double slope = std::log(prox.front() / prox.back()) / std::log(dts.front() / dts.back());
  bool pass = ident <= 1e-10 && slope >= 0.8 && slope <= 1.2 && stab <= 1.1;
  char buf[160];
  std::snprintf(buf, sizeof buf, "identity %.2e, proximity slope %.3f, stability %.4f", ident, slope, stab);
  return {"Leray time-projection", pass, slope, buf};
}

// Normal and area orders over levels 1..4 against k_g and k_g+1 (finest pair, ±0.3).
inline CheckResult check_geometry_orders(const std::vector<int>& kgs = {1, 2, 3}) {
  bool pass = true;
  std::string detail;
  double worst = 0.0;
  for (auto kind : {SurfaceKind::MovingSphere, SurfaceKind::OscillatingSphere})
    for (int kg : kgs) {
      GeometryReport r = geometry_convergence_report(AnalyticSurface(kind), kg, {1, 2, 3, 4}, 0.3);
      double on = r.normal_order.back(), oa = r.area_order.back();
      double dev = std::max(std::abs(on - kg), std::abs(oa - (kg + 1)));
      worst = std::max(worst, dev);
      bool ok = dev <= 0.3;
      pass = pass && ok;
      char buf[120];
      std::snprintf(buf, sizeof buf, "%s%s k_g=%d n %.2f area %.2f%s", detail.empty() ? "" : "; ",
                    surface_kind_name(kind).c_str(), kg, on, oa, ok ? "" : " (out of band)");
      detail += buf;
    }
  return {"geometric orders", pass, worst, detail};
}

// Ritz–Stokes energy error EOC on the moving sphere at t=0.
inline CheckResult check_ritz_stokes(int ku = 2, int kg = 2, int kl = 2) {
  ExactSolution ex;
  ex.surface = AnalyticSurface(SurfaceKind::MovingSphere);
  std::vector<double> e, h;
  for (int level = 1; level <= 3; ++level) {
    SurfaceMesh m = build_initial_mesh(ex.surface, level, kg);
    TaylorHoodSpace V(m, ku, ku - 1, kl, true);
    FormContext c(m, V);
    SnapshotData d = build_data(ex, Scheme::LmmDir, m, V);
    ProjectionResult r = ritz_stokes(c, ex, d);
    StepState st;
    st.u = r.u;
    ErrorOptions o;
    o.lambda_errors = false;
    StepErrors se = step_errors(c, ex, st, o);
    e.push_back(std::sqrt(se.ah * se.ah + se.l2 * se.l2));
    h.push_back(m.h_max());
  }
  double rate = eoc(e, h).back();
  double need = std::min(ku, kg) - 0.3;
  char buf[128];
  std::snprintf(buf, sizeof buf, "a_h errors %.3e %.3e %.3e, need >= %.2f", e[0], e[1], e[2], need);
  return {"Ritz-Stokes energy EOC", rate >= need, rate, buf};
}

// Zero-data energy witness: fitted c in ‖u^n‖² + 2μΔtΣ‖u^k‖²_{a_h} <= exp(c t_n)‖u^0‖².
inline CheckResult check_energy_stability() {
  double worst = 0.0;
  bool finite = true;
  std::string detail;
  struct Case {
    std::string bench, scheme;
    int level;
    double dt;
  };
  std::vector<Case> cases{{"moving_sphere", "lmm_dir", 1, 0.25},        {"moving_sphere", "lmm_dir", 2, 0.0625},
                          {"moving_sphere", "lmm_cov", 1, 0.25},        {"moving_sphere", "lmm_cov", 2, 0.0625},
                          {"oscillating_sphere", "lmm_dir", 1, 0.25},   {"oscillating_sphere", "lmm_dir", 2, 0.0625},
                          {"oscillating_sphere", "lmm_cov", 1, 0.25},   {"oscillating_sphere", "lmm_cov", 2, 0.0625}};
  for (auto& k : cases) {
    RunConfig cfg;
    cfg.benchmark = k.bench;
    cfg.scheme = k.scheme;
    cfg.fields = "zero";
    cfg.level = k.level;
    cfg.dt = k.dt;
    cfg.k_g = k.scheme == "lmm_cov" ? 3 : 2;
    cfg.T = AnalyticSurface(surface_kind_from_name(k.bench)).final_time();
    cfg.mu = k.bench == "moving_sphere" ? 0.5 : 2e-2;
    cfg.lambda_errors = false;
    Simulation sim(cfg);
    // initial data: discretely divergence-free projection of a smooth tangential field
    ExactSolution shape = sim.ex;
    shape.fields = FieldSet::Benchmark;
    SurfaceMesh m0 = sim.mesh0;
    FormContext c0(m0, sim.V);
    RunOptions opt;
    opt.initial_velocity = divergence_free_field(c0, shape);
    double E0 = 0.0, acc = 0.0, acc_unit = 0.0, c_fit = 0.0, c_unit = 0.0;
    opt.observer = [&](int n, const FormContext& c, const StepState& st) {
      SpMat M = assemble_mass(c);
      double l2 = st.u.dot(M * st.u);
      if (n == 0) {
        E0 = l2;
        return;
      }
      double ah = st.u.dot((assemble_strain(c) + M) * st.u);
      acc += 2.0 * cfg.mu * sim.prm.dt * ah;
      acc_unit += sim.prm.dt * ah;
      if (!std::isfinite(l2 + acc)) finite = false;
      c_fit = std::max(c_fit, std::log((l2 + acc) / E0) / st.t);
      c_unit = std::max(c_unit, std::log((l2 + acc_unit) / E0) / st.t);
    };
    sim.run(opt);
    worst = std::max(worst, c_fit);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s%s/%s L%d dt=%g c=%.3f (unweighted %.3f)", detail.empty() ? "" : "; ",
                  k.bench.c_str(), k.scheme.c_str(), k.level, k.dt, c_fit, c_unit);
    detail += buf;
  }
  return {"energy stability witness", finite && worst <= 5.0, worst, detail};
}

inline std::vector<CheckResult> run_property_suite(bool verbose = false) {
  std::vector<std::function<CheckResult()>> fns{
      [] { return check_skew_symmetry(); },   [] { return check_block_equivalence(); },
      [] { return check_transport(); },       [] { return check_leray(); },
      [] { return check_geometry_orders(); }, [] { return check_ritz_stokes(); },
      [] { return check_energy_stability(); }};
  std::vector<CheckResult> out;
  for (auto& f : fns) {
    out.push_back(f());
    if (verbose)
      std::fprintf(stderr, "[%s] %s: %.4g (%s)\n", out.back().pass ? "PASS" : "FAIL", out.back().name.c_str(),
                   out.back().value, out.back().detail.c_str());
  }
  return out;
}

}  // namespace surfns
