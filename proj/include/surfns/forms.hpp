#pragma once
// Sparse assembly of the discrete forms on one mesh snapshot.
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <thread>
#include <vector>

#include "surfns/fespace.hpp"

namespace surfns {

// Quadrature data of one snapshot: geometry plus tangential basis gradients.
class FormContext {
 public:
  const SurfaceMesh* mesh = nullptr;
  const TaylorHoodSpace* V = nullptr;
  QuadratureRule rule;
  std::vector<BasisSample> bu, bp, bl;
  std::vector<GeoSample> geo;  // index e*nq + q
  std::vector<double> w;       // quadrature weight times measure
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> gu, gp, gl;
  int threads = 1;

  FormContext() = default;
  FormContext(const SurfaceMesh& m, const TaylorHoodSpace& space, int quad_degree = -1, int nthreads = 1)
      : mesh(&m), V(&space), threads(std::max(1, nthreads)) {
    rule = quadrature(quad_degree < 0 ? 2 * space.ku + m.kg : quad_degree);
    std::vector<BasisSample> bg;
    for (auto& p : rule.points) {
      bg.push_back(m.geo_basis().eval(p[0], p[1]));
      bu.push_back(space.vel.basis.eval(p[0], p[1]));
      bp.push_back(space.pre.basis.eval(p[0], p[1]));
      bl.push_back(space.mul.basis.eval(p[0], p[1]));
    }
    const int ne = m.num_elements(), nq = nquad();
    geo.resize(static_cast<size_t>(ne) * nq);
    w.resize(geo.size());
    gu.resize(geo.size());
    gp.resize(geo.size());
    gl.resize(geo.size());
    parallel_for(ne, [&](int e) {
      for (int q = 0; q < nq; ++q) {
        size_t i = static_cast<size_t>(e) * nq + q;
        geo[i] = m.sample(e, bg[q]);
        w[i] = rule.weights[q] * geo[i].meas;
        gu[i] = bu[q].grad * geo[i].T.transpose();
        gp[i] = bp[q].grad * geo[i].T.transpose();
        gl[i] = bl[q].grad * geo[i].T.transpose();
      }
    });
  }

  int nquad() const { return rule.size(); }
  int nelem() const { return mesh->num_elements(); }
  size_t idx(int e, int q) const { return static_cast<size_t>(e) * nquad() + q; }

  template <class F>
  void parallel_for(int n, F&& f) const {
    int nt = std::min(threads, std::max(1, n));
    if (nt <= 1) {
      for (int i = 0; i < n; ++i) f(i);
      return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) {
      int lo = static_cast<int>(static_cast<long long>(n) * t / nt);
      int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / nt);
      pool.emplace_back([&f, lo, hi] {
        for (int i = lo; i < hi; ++i) f(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<int> vel_dofs(int e) const {
    const int* en = V->vel.layout.nodes_of(e);
    std::vector<int> d(3 * V->vel.nloc());
    for (int a = 0; a < V->vel.nloc(); ++a)
      for (int c = 0; c < 3; ++c) d[3 * a + c] = 3 * en[a] + c;
    return d;
  }
  std::vector<int> scalar_dofs(Field f, int e) const {
    const auto& L = V->layout(f);
    const int* en = L.layout.nodes_of(e);
    return std::vector<int>(en, en + L.nloc());
  }
  const std::vector<BasisSample>& basis(Field f) const {
    return f == Field::Velocity ? bu : (f == Field::Pressure ? bp : bl);
  }
  const Eigen::Matrix<double, Eigen::Dynamic, 3>& grads(Field f, size_t i) const {
    return f == Field::Velocity ? gu[i] : (f == Field::Pressure ? gp[i] : gl[i]);
  }
  // a velocity fe function at quadrature point q of element e
  Vec3 vel_value(const VecX& c, int e, int q) const {
    const int* en = V->vel.layout.nodes_of(e);
    Vec3 v = Vec3::Zero();
    for (int a = 0; a < V->vel.nloc(); ++a) v += bu[q].value[a] * c.segment<3>(3 * en[a]);
    return v;
  }
  Mat3 vel_grad(const VecX& c, int e, int q) const {
    const int* en = V->vel.layout.nodes_of(e);
    const auto& G = gu[idx(e, q)];
    Mat3 M = Mat3::Zero();
    for (int a = 0; a < V->vel.nloc(); ++a) M += c.segment<3>(3 * en[a]) * G.row(a);
    return M;
  }
  // scalar data stored on velocity nodes
  double vnode_value(const VecX& c, int e, int q) const {
    const int* en = V->vel.layout.nodes_of(e);
    double v = 0.0;
    for (int a = 0; a < V->vel.nloc(); ++a) v += bu[q].value[a] * c[en[a]];
    return v;
  }
  double scalar_value(Field f, const VecX& c, int e, int q) const {
    const auto& L = V->layout(f);
    const int* en = L.layout.nodes_of(e);
    double v = 0.0;
    for (int a = 0; a < L.nloc(); ++a) v += basis(f)[q].value[a] * c[en[a]];
    return v;
  }
  Vec3 scalar_grad(Field f, const VecX& c, int e, int q) const {
    const auto& L = V->layout(f);
    const int* en = L.layout.nodes_of(e);
    const auto& G = grads(f, idx(e, q));
    Vec3 v = Vec3::Zero();
    for (int a = 0; a < L.nloc(); ++a) v += c[en[a]] * G.row(a).transpose();
    return v;
  }

  // generic element assembly; kernel(e, local) adds to the local matrix
  template <class RowMap, class ColMap, class Kernel>
  SpMat assemble(int nrows, int ncols, RowMap rows, ColMap cols, Kernel kernel) const {
    const int ne = nelem();
    int nt = std::min(threads, ne);
    std::vector<std::vector<Triplet>> trip(nt);
    auto work = [&](int t) {
      int lo = static_cast<int>(static_cast<long long>(ne) * t / nt);
      int hi = static_cast<int>(static_cast<long long>(ne) * (t + 1) / nt);
      Eigen::MatrixXd loc;
      for (int e = lo; e < hi; ++e) {
        auto r = rows(e);
        auto c = cols(e);
        loc.setZero(r.size(), c.size());
        kernel(e, loc);
        for (size_t i = 0; i < r.size(); ++i)
          for (size_t j = 0; j < c.size(); ++j)
            if (loc(i, j) != 0.0) trip[t].emplace_back(r[i], c[j], loc(i, j));
      }
    };
    if (nt <= 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nt; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    std::vector<Triplet> all;
    for (auto& v : trip) all.insert(all.end(), v.begin(), v.end());
    SpMat M(nrows, ncols);
    M.setFromTriplets(all.begin(), all.end());
    return M;
  }

  template <class RowMap, class Kernel>
  VecX assemble_vector(int n, RowMap rows, Kernel kernel) const {
    VecX out = VecX::Zero(n);
    Eigen::VectorXd loc;
    for (int e = 0; e < nelem(); ++e) {
      auto r = rows(e);
      loc.setZero(r.size());
      kernel(e, loc);
      for (size_t i = 0; i < r.size(); ++i) out[r[i]] += loc[i];
    }
    return out;
  }

  auto vrow() const {
    return [this](int e) { return vel_dofs(e); };
  }
  auto srow(Field f) const {
    return [this, f](int e) { return scalar_dofs(f, e); };
  }
};

// velocity-velocity kernel helper: k(q, a, b) returns the 3×3 block (c,d) for basis pair (a,b)
template <class K>
SpMat assemble_vv(const FormContext& c, K k) {
  const int nl = c.V->vel.nloc();
  return c.assemble(c.V->n_u(), c.V->n_u(), c.vrow(), c.vrow(), [&](int e, Eigen::MatrixXd& loc) {
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b) loc.block<3, 3>(3 * a, 3 * b) += c.w[i] * k(e, q, i, a, b);
    }
  });
}

// m_h(w,v) = ∫ w·v
inline SpMat assemble_mass(const FormContext& c) {
  return assemble_vv(c, [&](int, int q, size_t, int a, int b) -> Mat3 {
    return c.bu[q].value[a] * c.bu[q].value[b] * Mat3::Identity();
  });
}
// g_h = ∫ div_{Γh}(V_h) w·v
inline SpMat assemble_g(const FormContext& c) {
  return assemble_vv(c, [&](int, int q, size_t i, int a, int b) -> Mat3 {
    return c.geo[i].divW * c.bu[q].value[a] * c.bu[q].value[b] * Mat3::Identity();
  });
}
// m_h(w, P_h v) and g_h(w, P_h v)
inline SpMat assemble_projected_mass(const FormContext& c) {
  return assemble_vv(c, [&](int, int q, size_t i, int a, int b) -> Mat3 {
    return c.bu[q].value[a] * c.bu[q].value[b] * c.geo[i].P;
  });
}
inline SpMat assemble_projected_g(const FormContext& c) {
  return assemble_vv(c, [&](int, int q, size_t i, int a, int b) -> Mat3 {
    return c.geo[i].divW * c.bu[q].value[a] * c.bu[q].value[b] * c.geo[i].P;
  });
}
// a_{S,h} = ∫ E_h(w):E_h(v)
inline SpMat assemble_strain(const FormContext& c) {
  return assemble_vv(c, [&](int, int, size_t i, int a, int b) -> Mat3 {
    Vec3 ga = c.gu[i].row(a).transpose(), gb = c.gu[i].row(b).transpose();
    // row c (test component), column d (trial component)
    return 0.5 * (c.geo[i].P * ga.dot(gb) + gb * ga.transpose());
  });
}
// ∫ E_h(P_h w):E_h(P_h v) using E_h(P_h w) = E_h(w) - (w·n_h) H_h
inline SpMat assemble_tangential_strain(const FormContext& c) {
  const int nl = c.V->vel.nloc();
  return c.assemble(c.V->n_u(), c.V->n_u(), c.vrow(), c.vrow(), [&](int e, Eigen::MatrixXd& loc) {
    std::vector<Mat3> Ehat(3 * nl);
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      const GeoSample& g = c.geo[i];
      for (int a = 0; a < nl; ++a) {
        Vec3 ga = c.gu[i].row(a).transpose();
        for (int k = 0; k < 3; ++k) {
          Vec3 Pk = g.P.col(k);
          Ehat[3 * a + k] = 0.5 * (Pk * ga.transpose() + ga * Pk.transpose()) - c.bu[q].value[a] * g.n[k] * g.H;
        }
      }
      for (int r = 0; r < 3 * nl; ++r)
        for (int s = 0; s < 3 * nl; ++s) loc(r, s) += c.w[i] * Ehat[r].cwiseProduct(Ehat[s]).sum();
    }
  });
}
// τ-free penalty ∫ (w·ñ)(v·ñ) with ñ the exact normal at the closest point
inline SpMat assemble_normal_penalty(const FormContext& c) {
  std::vector<Vec3> nt(c.geo.size());
  for (size_t i = 0; i < nt.size(); ++i) nt[i] = c.mesh->improved_normal(c.geo[i].x);
  return assemble_vv(c, [&](int, int q, size_t i, int a, int b) -> Mat3 {
    return c.bu[q].value[a] * c.bu[q].value[b] * nt[i] * nt[i].transpose();
  });
}
// a^T_{S,h} = 2μ ∫E_h(P_h u):E_h(P_h v) + τ ∫(u·ñ)(v·ñ)
inline SpMat assemble_penalty_form(const FormContext& c, double mu, double tau) {
  SpMat A = 2.0 * mu * assemble_tangential_strain(c);
  if (tau != 0.0) A += tau * assemble_normal_penalty(c);
  return A;
}
inline double penalty_tau(double h) { return 0.5 / (h * h); }

// B_p: rows pressure, ∫ w·∇_{Γh} q
inline SpMat assemble_bp(const FormContext& c) {
  const int nu = c.V->vel.nloc(), np = c.V->pre.nloc();
  return c.assemble(c.V->n_p(), c.V->n_u(), c.srow(Field::Pressure), c.vrow(), [&](int e, Eigen::MatrixXd& loc) {
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      for (int j = 0; j < np; ++j)
        for (int b = 0; b < nu; ++b)
          for (int d = 0; d < 3; ++d) loc(j, 3 * b + d) += c.w[i] * c.bu[q].value[b] * c.gp[i](j, d);
    }
  });
}
// ∫ q div_{Γh} w (integration-by-parts constraint rows)
inline SpMat assemble_bdiv(const FormContext& c) {
  const int nu = c.V->vel.nloc(), np = c.V->pre.nloc();
  return c.assemble(c.V->n_p(), c.V->n_u(), c.srow(Field::Pressure), c.vrow(), [&](int e, Eigen::MatrixXd& loc) {
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      for (int j = 0; j < np; ++j)
        for (int b = 0; b < nu; ++b)
          for (int d = 0; d < 3; ++d) loc(j, 3 * b + d) += c.w[i] * c.bp[q].value[j] * c.gu[i](b, d);
    }
  });
}
// B_λ: ∫ ξ w·n_h
inline SpMat assemble_bl(const FormContext& c) {
  const int nu = c.V->vel.nloc(), nl = c.V->mul.nloc();
  return c.assemble(c.V->n_l(), c.V->n_u(), c.srow(Field::Multiplier), c.vrow(), [&](int e, Eigen::MatrixXd& loc) {
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      for (int j = 0; j < nl; ++j)
        for (int b = 0; b < nu; ++b)
          for (int d = 0; d < 3; ++d)
            loc(j, 3 * b + d) += c.w[i] * c.bl[q].value[j] * c.bu[q].value[b] * c.geo[i].n[d];
    }
  });
}

// m·q = ∫ q_h for a scalar field
inline VecX zero_mean_constraint(const FormContext& c, Field f = Field::Pressure) {
  const int nl = c.V->layout(f).nloc();
  return c.assemble_vector(c.V->ndofs(f), c.srow(f), [&](int e, Eigen::VectorXd& loc) {
    for (int q = 0; q < c.nquad(); ++q)
      for (int j = 0; j < nl; ++j) loc[j] += c.w[c.idx(e, q)] * c.basis(f)[q].value[j];
  });
}
// ∫ η_h χ_j, η_h given on velocity nodes
inline VecX assemble_scalar_load(const FormContext& c, Field f, const VecX& eta_vnodes) {
  const int nl = c.V->layout(f).nloc();
  return c.assemble_vector(c.V->ndofs(f), c.srow(f), [&](int e, Eigen::VectorXd& loc) {
    for (int q = 0; q < c.nquad(); ++q) {
      double v = c.w[c.idx(e, q)] * c.vnode_value(eta_vnodes, e, q);
      for (int j = 0; j < nl; ++j) loc[j] += v * c.basis(f)[q].value[j];
    }
  });
}
inline SpMat assemble_scalar_mass(const FormContext& c, Field f) {
  const int nl = c.V->layout(f).nloc();
  return c.assemble(c.V->ndofs(f), c.V->ndofs(f), c.srow(f), c.srow(f), [&](int e, Eigen::MatrixXd& loc) {
    for (int q = 0; q < c.nquad(); ++q) {
      const auto& v = c.basis(f)[q].value;
      loc.noalias() += c.w[c.idx(e, q)] * v.head(nl) * v.head(nl).transpose();
    }
  });
}
inline SpMat assemble_scalar_stiffness(const FormContext& c, Field f) {
  return c.assemble(c.V->ndofs(f), c.V->ndofs(f), c.srow(f), c.srow(f), [&](int e, Eigen::MatrixXd& loc) {
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      const auto& G = c.grads(f, i);
      loc.noalias() += c.w[i] * G * G.transpose();
    }
  });
}

// ‖ℓ‖_{H_h^{-1}} = sqrt(bᵀK⁻¹b) with b = Mℓ, K = M + stiffness
inline double h1_dual_norm(const FormContext& c, Field f, const VecX& ell) {
  if (ell.isZero(0.0)) return 0.0;
  SpMat M = assemble_scalar_mass(c, f);
  SpMat K = M + assemble_scalar_stiffness(c, f);
  VecX b = M * ell;
  Eigen::SimplicialLDLT<SpMat> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("h1_dual_norm: H1 Gram factorization failed");
  VecX y = ldlt.solve(b);
  return std::sqrt(std::max(0.0, b.dot(y)));
}

struct ConvParts {
  bool skew = true;  // the skew-symmetric pairs
  bool eta = true;   // the η-weighted symmetric terms
};

// directional skew form ½(∫(z·∇)u·v − ∫(z·∇)v·u) − ½∫η₂ u·v
inline SpMat assemble_convective_dir(const FormContext& c, const VecX& z, const VecX& eta2, ConvParts parts = {}) {
  const int nl = c.V->vel.nloc();
  return c.assemble(c.V->n_u(), c.V->n_u(), c.vrow(), c.vrow(), [&](int e, Eigen::MatrixXd& loc) {
    Eigen::VectorXd gz(nl);
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      Vec3 zq = c.vel_value(z, e, q);
      double e2 = parts.eta ? c.vnode_value(eta2, e, q) : 0.0;
      gz = c.gu[i] * zq;
      const auto& phi = c.bu[q].value;
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b) {
          double s = 0.0;
          if (parts.skew) s += 0.5 * (phi[a] * gz[b] - phi[b] * gz[a]);
          s -= 0.5 * e2 * phi[a] * phi[b];
          s *= c.w[i];
          for (int k = 0; k < 3; ++k) loc(3 * a + k, 3 * b + k) += s;
        }
    }
  });
}

// covariant form with the Weingarten pair and η terms
inline SpMat assemble_convective_cov(const FormContext& c, const VecX& z, const VecX& eta1, const VecX& eta2,
                                     ConvParts parts = {}) {
  const int nl = c.V->vel.nloc();
  return c.assemble(c.V->n_u(), c.V->n_u(), c.vrow(), c.vrow(), [&](int e, Eigen::MatrixXd& loc) {
    Eigen::VectorXd gz(nl);
    for (int q = 0; q < c.nquad(); ++q) {
      size_t i = c.idx(e, q);
      const GeoSample& g = c.geo[i];
      Vec3 zq = c.vel_value(z, e, q);
      Vec3 Hz = g.H * zq;
      double e1 = parts.eta ? c.vnode_value(eta1, e, q) : 0.0;
      double e2 = parts.eta ? c.vnode_value(eta2, e, q) : 0.0;
      gz = c.gu[i] * zq;
      const auto& phi = c.bu[q].value;
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b) {
          // row (a,ci) test, column (b,di) trial
          Mat3 blk = Mat3::Zero();
          if (parts.skew) {
            blk += 0.5 * (phi[a] * gz[b] - phi[b] * gz[a]) * g.P;
            blk += -0.5 * phi[a] * phi[b] * Hz * g.n.transpose();
            blk += 0.5 * phi[a] * phi[b] * g.n * Hz.transpose();
          }
          blk += 0.5 * e1 * phi[a] * phi[b] * g.H - 0.5 * e2 * phi[a] * phi[b] * g.P;
          loc.block<3, 3>(3 * a, 3 * b) += c.w[i] * blk;
        }
    }
  });
}

}  // namespace surfns
