#pragma once
// Saddle-point solves, time steppers and the Leray / Ritz–Stokes projections.
#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "surfns/forms.hpp"

namespace surfns {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Block system
//   [A     Bpᵀ  Blᵀ  0 ] [u]   [fu]
//   [Bp_r  0    0    m ] [p] = [fp]
//   [Bl    0    0    0 ] [λ]   [fl]
//   [0     mᵀ   0    0 ] [s]   [0 ]
// Bp_r may differ from Bp (integration-by-parts rows). The scalar s carries the
// constant-pressure mode; m is the pressure mean functional.
struct SaddleSystem {
  SpMat A;
  std::optional<SpMat> Bp, Bp_rows, Bl;
  std::optional<VecX> mean;
  VecX fu, fp, fl;
};

struct SaddleSolution {
  VecX u, p, l;
  double s = 0.0;
  double residual = 0.0;
};

inline SaddleSolution solve_saddle(const SaddleSystem& sys) {
  const int nu = static_cast<int>(sys.A.rows());
  if (sys.A.cols() != nu || sys.fu.size() != nu) throw std::invalid_argument("solve_saddle: inconsistent velocity block");
  const int np = sys.Bp ? static_cast<int>(sys.Bp->rows()) : 0;
  const int nl = sys.Bl ? static_cast<int>(sys.Bl->rows()) : 0;
  const int ns = sys.mean ? 1 : 0;
  if (sys.mean && !sys.Bp) throw std::invalid_argument("solve_saddle: mean row without pressure block");
  const SpMat* Br = sys.Bp_rows ? &*sys.Bp_rows : (sys.Bp ? &*sys.Bp : nullptr);
  const int N = nu + np + nl + ns;
  auto check = [&](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("solve_saddle: inconsistent ") + what);
  };
  if (np) check(sys.Bp->cols() == nu && Br->rows() == np && Br->cols() == nu && sys.fp.size() == np, "pressure block");
  if (nl) check(sys.Bl->cols() == nu && sys.fl.size() == nl, "multiplier block");
  if (ns) check(sys.mean->size() == np, "mean functional");
  std::vector<Triplet> t;
  t.reserve(sys.A.nonZeros() + 2 * (np ? sys.Bp->nonZeros() : 0) + 2 * (nl ? sys.Bl->nonZeros() : 0) + 2 * np);
  auto add = [&](const SpMat& M, int r0, int c0, bool transpose) {
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMat::InnerIterator it(M, k); it; ++it)
        transpose ? t.emplace_back(r0 + it.col(), c0 + it.row(), it.value())
                  : t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
  };
  add(sys.A, 0, 0, false);
  if (np) {
    add(*sys.Bp, 0, nu, true);
    add(*Br, nu, 0, false);
  }
  if (nl) {
    add(*sys.Bl, 0, nu + np, true);
    add(*sys.Bl, nu + np, 0, false);
  }
  if (ns) {
    for (int j = 0; j < np; ++j) {
      t.emplace_back(nu + j, N - 1, (*sys.mean)[j]);
      t.emplace_back(N - 1, nu + j, (*sys.mean)[j]);
    }
  }
  SpMat K(N, N);
  K.setFromTriplets(t.begin(), t.end());
  VecX b = VecX::Zero(N);
  b.head(nu) = sys.fu;
  if (np) b.segment(nu, np) = sys.fp;
  if (nl) b.segment(nu + np, nl) = sys.fl;

  SaddleSolution sol;
  VecX x = VecX::Zero(N);
  if (b.squaredNorm() > 0.0) {
    K.makeCompressed();
    Eigen::UmfPackLU<SpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "saddle factorization failed (Eigen status " << static_cast<int>(lu.info()) << ")";
      if (N <= 4000) {
        Eigen::FullPivLU<Eigen::MatrixXd> d{Eigen::MatrixXd(K)};
        msg << "; detected null space dimension " << N - d.rank();
      } else {
        msg << "; null space dimension not computed for N=" << N;
      }
      throw SolverError(msg.str());
    }
    x = lu.solve(b);
    sol.residual = (K * x - b).norm() / b.norm();
  }
  if (!x.allFinite()) throw SolverError("saddle solve produced non-finite values");
  sol.u = x.head(nu);
  sol.p = np ? VecX(x.segment(nu, np)) : VecX();
  sol.l = nl ? VecX(x.segment(nu + np, nl)) : VecX();
  sol.s = ns ? x[N - 1] : 0.0;
  return sol;
}

enum class ConstraintForm { Strong, Ibp };

// Data interpolants on one snapshot, all evaluated at π(node).
struct SnapshotData {
  VecX f;     // forcing, velocity coefficients
  VecX eta1;  // constraint data on velocity nodes
  VecX eta2;  // normal speed on velocity nodes (convective forms)
  VecX vn;    // prescribed normal velocity of the solution (λ rows)
  VecX gdiv;  // div_Γ u, for integration-by-parts rows
};

inline SnapshotData build_data(const ExactSolution& ex, Scheme scheme, const SurfaceMesh& mesh,
                               const TaylorHoodSpace& V) {
  const double t = mesh.t;
  auto x = node_positions(V.vel, mesh);
  SnapshotData d;
  const int n = static_cast<int>(x.size());
  d.f.resize(3 * n);
  d.eta1.resize(n);
  d.eta2.resize(n);
  d.vn.resize(n);
  d.gdiv.resize(n);
  for (int i = 0; i < n; ++i) {
    Vec3 y = mesh.surface.closest_point(x[i], t);
    d.f.segment<3>(3 * i) = ex.forcing(y, t, scheme);
    if (ex.fields == FieldSet::Zero) {
      d.eta1[i] = d.eta2[i] = d.vn[i] = d.gdiv[i] = 0.0;
      continue;
    }
    d.gdiv[i] = ex.div_velocity(y, t);
    d.eta1[i] = ex.eta1(y, t);
    d.eta2[i] = ex.eta2(y, t);
    d.vn[i] = ex.solution_normal_speed(y, t);
  }
  return d;
}

struct StepState {
  double t = 0.0;
  VecX u, p, l;
  double s = 0.0;
  double residual = 0.0;
  double constraint_residual = 0.0;
};

struct StepParams {
  Scheme scheme = Scheme::LmmDir;
  ConstraintForm constraint = ConstraintForm::Strong;
  double dt = 0.1;
  double mu = 0.5;
  double rho = 1.0;
  double tau = 0.0;  // pm only
};

// Constraint blocks on one snapshot.
struct ConstraintBlocks {
  SpMat Bp, Bp_rows, Bl;
  VecX mean, fp, fl;
};

inline ConstraintBlocks build_constraints(const FormContext& c, const SnapshotData& d, ConstraintForm form,
                                          bool with_lambda) {
  ConstraintBlocks b;
  b.Bp = assemble_bp(c);
  b.mean = zero_mean_constraint(c);
  if (form == ConstraintForm::Strong) {
    b.Bp_rows = b.Bp;
    b.fp = assemble_scalar_load(c, Field::Pressure, d.eta1);
  } else {
    b.Bp_rows = assemble_bdiv(c);
    b.fp = assemble_scalar_load(c, Field::Pressure, d.gdiv);
  }
  if (with_lambda) {
    b.Bl = assemble_bl(c);
    b.fl = assemble_scalar_load(c, Field::Multiplier, d.vn);
  }
  return b;
}

// max over test functions of |b(u,·) − rhs|; the pressure residual is taken
// against zero-mean test functions (component along m removed)
inline double divergence_residual(const VecX& u, const ConstraintBlocks& b, bool with_lambda) {
  VecX rp = b.Bp_rows * u - b.fp;
  double mm = b.mean.squaredNorm();
  if (mm > 0) rp -= (b.mean.dot(rp) / mm) * b.mean;
  double r = rp.size() ? rp.cwiseAbs().maxCoeff() : 0.0;
  if (with_lambda && b.Bl.rows() > 0) r = std::max(r, (b.Bl * u - b.fl).cwiseAbs().maxCoeff());
  return r;
}

struct StepResult {
  StepState state;
  SpMat M;  // mass (or projected mass) on the new snapshot, reused next step
};

inline void check_finite(const StepState& s, int step) {
  if (!s.u.allFinite() || !s.p.allFinite() || !s.l.allFinite())
    throw SolverError("non-finite solution at step " + std::to_string(step));
}

// One backward Euler step of the Lagrange multiplier scheme.
inline StepResult lmm_step(const StepState& prev, const SpMat& M_prev, const FormContext& c, const SnapshotData& d,
                           const StepParams& prm) {
  SpMat M = assemble_mass(c);
  SpMat G = assemble_g(c);
  SpMat AS = assemble_strain(c);
  SpMat C = prm.scheme == Scheme::LmmCov ? assemble_convective_cov(c, prev.u, d.eta1, d.eta2)
                                         : assemble_convective_dir(c, prev.u, d.eta2);
  SaddleSystem sys;
  sys.A = prm.rho * ((1.0 / prm.dt) * M - G + C) + (2.0 * prm.mu) * AS;
  sys.fu = M * d.f + (prm.rho / prm.dt) * (M_prev * prev.u);
  ConstraintBlocks b = build_constraints(c, d, prm.constraint, true);
  sys.Bp = b.Bp;
  sys.Bp_rows = b.Bp_rows;
  sys.Bl = b.Bl;
  sys.mean = b.mean;
  sys.fp = b.fp;
  sys.fl = b.fl;
  SaddleSolution sol = solve_saddle(sys);
  StepResult r;
  r.state.t = c.mesh->t;
  r.state.u = sol.u;
  r.state.p = sol.p;
  r.state.l = sol.l;
  r.state.s = sol.s;
  r.state.residual = sol.residual;
  r.state.constraint_residual = divergence_residual(sol.u, b, true);
  r.M = std::move(M);
  return r;
}

// One step of the penalty scheme (single pressure, no multiplier).
inline StepResult pm_step(const StepState& prev, const SpMat& MP_prev, const FormContext& c, const SnapshotData& d,
                          const StepParams& prm) {
  SpMat MP = assemble_projected_mass(c);
  SpMat GP = assemble_projected_g(c);
  SpMat AT = assemble_penalty_form(c, prm.mu, prm.tau);
  SpMat C = assemble_convective_cov(c, prev.u, d.eta1, d.eta2);
  SaddleSystem sys;
  sys.A = prm.rho * ((1.0 / prm.dt) * MP - GP + C) + AT;
  sys.fu = MP * d.f + (prm.rho / prm.dt) * (MP_prev * prev.u);
  ConstraintBlocks b = build_constraints(c, d, prm.constraint, false);
  sys.Bp = b.Bp;
  sys.Bp_rows = b.Bp_rows;
  sys.mean = b.mean;
  sys.fp = b.fp;
  SaddleSolution sol = solve_saddle(sys);
  StepResult r;
  r.state.t = c.mesh->t;
  r.state.u = sol.u;
  r.state.p = sol.p;
  r.state.l = VecX();
  r.state.s = sol.s;
  r.state.residual = sol.residual;
  r.state.constraint_residual = divergence_residual(sol.u, b, false);
  r.M = std::move(MP);
  return r;
}

struct ProjectionResult {
  VecX u, p, l;
  double residual = 0.0;
  double constraint_residual = 0.0;
};

// Leray time-projection: m_h(ŵ,v) + b(v,{p̂,λ̂}) = m_h(w^{n-1}, v^{n-1}), b(ŵ,·) = 0.
inline ProjectionResult leray_time_projection(const VecX& w_prev, const SpMat& M_prev, const FormContext& c) {
  SaddleSystem sys;
  sys.A = assemble_mass(c);
  sys.fu = M_prev * w_prev;
  ConstraintBlocks b;
  b.Bp = b.Bp_rows = assemble_bp(c);
  b.Bl = assemble_bl(c);
  b.mean = zero_mean_constraint(c);
  b.fp = VecX::Zero(c.V->n_p());
  b.fl = VecX::Zero(c.V->n_l());
  sys.Bp = b.Bp;
  sys.Bl = b.Bl;
  sys.mean = b.mean;
  sys.fp = b.fp;
  sys.fl = b.fl;
  SaddleSolution s = solve_saddle(sys);
  return {s.u, s.p, s.l, s.residual, divergence_residual(s.u, b, true)};
}

enum class RitzVariant { Modified, Standard };

// right-hand side a(u, v^ℓ) realized as a_h(u^{-ℓ}, v_h) with exact fields at π(x_q)
inline VecX ritz_rhs(const FormContext& c, const ExactSolution& ex, RitzVariant variant) {
  const int nl = c.V->vel.nloc();
  const double t = c.mesh->t;
  return c.assemble_vector(c.V->n_u(), c.vrow(), [&](int e, Eigen::VectorXd& loc) {
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      const GeoSample& g = c.geo[i];
      ExactValue ev = ex.lifted(g.x, t);
      Mat3 cov = g.P * ev.grad * g.P;
      Mat3 E = 0.5 * (cov + cov.transpose());
      Vec3 gp = g.P * ev.grad_p;
      for (int a = 0; a < nl; ++a) {
        Vec3 ga = c.gu[i].row(a).transpose();
        Vec3 r = E * ga + c.bu[q].value[a] * ev.u;
        if (variant == RitzVariant::Standard) r += c.bu[q].value[a] * gp;
        loc.segment<3>(3 * a) += c.w[i] * r;
      }
    }
  });
}

// Ritz–Stokes projection with constraint b(R u,·) = m_h(η,·) from the data d.
inline ProjectionResult ritz_stokes(const FormContext& c, const ExactSolution& ex, const SnapshotData& d,
                                    RitzVariant variant = RitzVariant::Modified) {
  SaddleSystem sys;
  sys.A = assemble_strain(c) + assemble_mass(c);
  sys.fu = ritz_rhs(c, ex, variant);
  ConstraintBlocks b = build_constraints(c, d, ConstraintForm::Strong, true);
  sys.Bp = b.Bp;
  sys.Bl = b.Bl;
  sys.mean = b.mean;
  sys.fp = b.fp;
  sys.fl = b.fl;
  SaddleSolution s = solve_saddle(sys);
  return {s.u, s.p, s.l, s.residual, divergence_residual(s.u, b, true)};
}

// Identity mode: a_h(u_h, v) on the right with compatible constraint data, so R u_h = u_h.
inline ProjectionResult ritz_stokes_discrete(const FormContext& c, const VecX& uh) {
  SaddleSystem sys;
  sys.A = assemble_strain(c) + assemble_mass(c);
  sys.fu = sys.A * uh;
  ConstraintBlocks b;
  b.Bp = b.Bp_rows = assemble_bp(c);
  b.Bl = assemble_bl(c);
  b.mean = zero_mean_constraint(c);
  b.fp = b.Bp * uh;
  b.fl = b.Bl * uh;
  sys.Bp = b.Bp;
  sys.Bl = b.Bl;
  sys.mean = b.mean;
  sys.fp = b.fp;
  sys.fl = b.fl;
  SaddleSolution s = solve_saddle(sys);
  return {s.u, s.p, s.l, s.residual, divergence_residual(s.u, b, true)};
}

}  // namespace surfns
