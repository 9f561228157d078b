#pragma once
// Taylor–Hood spaces riding on the evolving mesh. Dof numbering is fixed at
// construction, so a coefficient vector is a valid function on every snapshot.
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

#include "surfns/mesh.hpp"

namespace surfns {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using VecX = Eigen::VectorXd;

enum class Field { Velocity, Pressure, Multiplier };

struct ScalarLayout {
  NodeLayout layout;
  LagrangeBasis basis;
  ScalarLayout() = default;
  ScalarLayout(const Topology& T, int k) : layout(T, k), basis(k) {}
  int size() const { return layout.num_nodes; }
  int nloc() const { return layout.nloc; }
};

class TaylorHoodSpace {
 public:
  int ku = 2, kpr = 1, kl = 2, kg = 2;
  ScalarLayout vel, pre, mul;

  TaylorHoodSpace() = default;
  TaylorHoodSpace(const SurfaceMesh& mesh, int k_u, int k_pr, int k_l, bool quiet = false)
      : ku(k_u), kpr(k_pr), kl(k_l), kg(mesh.kg) {
    if (k_u < 2 || k_u > 3) throw std::invalid_argument("k_u must be 2 or 3");
    if (k_pr != k_u - 1) throw std::invalid_argument("Taylor-Hood pairing requires k_pr = k_u - 1");
    if (k_l < 1 || k_l > 3) throw std::invalid_argument("k_lambda must be in 1..3");
    if (!quiet && k_l != k_u && k_l != k_u - 1)
      std::cerr << "warning: k_lambda=" << k_l << " is neither k_u nor k_u-1\n";
    vel = ScalarLayout(mesh.topology(), k_u);
    pre = ScalarLayout(mesh.topology(), k_pr);
    mul = ScalarLayout(mesh.topology(), k_l);
  }
  int n_vel_nodes() const { return vel.size(); }
  int n_u() const { return 3 * vel.size(); }
  int n_p() const { return pre.size(); }
  int n_l() const { return mul.size(); }
  const ScalarLayout& layout(Field f) const {
    return f == Field::Velocity ? vel : (f == Field::Pressure ? pre : mul);
  }
  int ndofs(Field f) const { return f == Field::Velocity ? n_u() : layout(f).size(); }
};

struct FeFunction {
  Field field = Field::Velocity;
  VecX coeffs;
  FeFunction() = default;
  FeFunction(Field f, VecX c) : field(f), coeffs(std::move(c)) {}
  static FeFunction zero(const TaylorHoodSpace& V, Field f) { return {f, VecX::Zero(V.ndofs(f))}; }
};

// Positions on Γ_h of the nodes of a scalar layout.
inline std::vector<Vec3> node_positions(const ScalarLayout& L, const SurfaceMesh& mesh) {
  std::vector<Vec3> x(L.size(), Vec3::Zero());
  std::vector<BasisSample> geo;
  for (auto& r : L.basis.nodes()) geo.push_back(mesh.geo_basis().eval(r[0], r[1]));
  std::vector<char> done(L.size(), 0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int* en = L.layout.nodes_of(e);
    const int* gn = mesh.geo_layout().nodes_of(e);
    for (int a = 0; a < L.nloc(); ++a) {
      if (done[en[a]]) continue;
      Vec3 p = Vec3::Zero();
      for (int b = 0; b < mesh.geo_layout().nloc; ++b) p += geo[a].value[b] * mesh.pos[gn[b]];
      x[en[a]] = p;
      done[en[a]] = 1;
    }
  }
  return x;
}

// Nodal interpolation of a function of (x on Γ_h, t).
inline FeFunction interpolate_scalar(const TaylorHoodSpace& V, Field f, const SurfaceMesh& mesh,
                                     const std::function<double(const Vec3&)>& fn) {
  if (f == Field::Velocity) throw std::invalid_argument("interpolate_scalar: velocity is vector valued");
  auto x = node_positions(V.layout(f), mesh);
  VecX c(x.size());
  for (size_t i = 0; i < x.size(); ++i) c[i] = fn(x[i]);
  return {f, c};
}
inline FeFunction interpolate_vector(const TaylorHoodSpace& V, const SurfaceMesh& mesh,
                                     const std::function<Vec3(const Vec3&)>& fn) {
  auto x = node_positions(V.vel, mesh);
  VecX c(3 * x.size());
  for (size_t i = 0; i < x.size(); ++i) c.segment<3>(3 * i) = fn(x[i]);
  return {Field::Velocity, c};
}
// scalar data on the velocity layout (used for η data)
inline VecX interpolate_on_velocity_nodes(const TaylorHoodSpace& V, const SurfaceMesh& mesh,
                                          const std::function<double(const Vec3&)>& fn) {
  auto x = node_positions(V.vel, mesh);
  VecX c(x.size());
  for (size_t i = 0; i < x.size(); ++i) c[i] = fn(x[i]);
  return c;
}

struct FeSample {
  Vec3 value = Vec3::Zero();
  Mat3 grad = Mat3::Zero();  // ∇_{Γh}, rows = components
  Mat3 cov = Mat3::Zero();   // P_h ∇_{Γh}
  Mat3 strain() const { return 0.5 * (cov + cov.transpose()); }
  double div() const { return grad.trace(); }
};

// Evaluate a function at a reference point of an element (scalars use component 0).
inline FeSample eval(const TaylorHoodSpace& V, const FeFunction& f, const SurfaceMesh& mesh, int elem, double xi,
                     double eta) {
  GeoSample g = mesh.element_geometry(elem, xi, eta);
  const ScalarLayout& L = V.layout(f.field);
  BasisSample b = L.basis.eval(xi, eta);
  const int* en = L.layout.nodes_of(elem);
  FeSample s;
  for (int a = 0; a < L.nloc(); ++a) {
    Vec3 ga = g.T * b.grad.row(a).transpose();
    if (f.field == Field::Velocity) {
      Vec3 c = f.coeffs.segment<3>(3 * en[a]);
      s.value += b.value[a] * c;
      s.grad += c * ga.transpose();
    } else {
      double c = f.coeffs[en[a]];
      s.value[0] += b.value[a] * c;
      s.grad.row(0) += c * ga.transpose();
    }
  }
  s.cov = g.P * s.grad;
  return s;
}

// Samples the velocity at the geometric nodes (for VTU output).
inline std::vector<Vec3> sample_at_geo_nodes(const TaylorHoodSpace& V, const FeFunction& f, const SurfaceMesh& mesh) {
  std::vector<Vec3> out(mesh.num_geo_nodes(), Vec3::Zero());
  const auto& gl = mesh.geo_layout();
  const ScalarLayout& L = V.layout(f.field);
  std::vector<BasisSample> bs;
  for (auto& r : mesh.geo_basis().nodes()) bs.push_back(L.basis.eval(r[0], r[1]));
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int* gn = gl.nodes_of(e);
    const int* en = L.layout.nodes_of(e);
    for (int a = 0; a < gl.nloc; ++a) {
      Vec3 v = Vec3::Zero();
      for (int b = 0; b < L.nloc(); ++b) {
        if (f.field == Field::Velocity)
          v += bs[a].value[b] * f.coeffs.segment<3>(3 * en[b]);
        else
          v[0] += bs[a].value[b] * f.coeffs[en[b]];
      }
      out[gn[a]] = v;
    }
  }
  return out;
}

}  // namespace surfns
