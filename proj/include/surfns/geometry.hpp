#pragma once
// Analytic evolving spheres and the exact benchmark solutions.
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "surfns/dual.hpp"

namespace surfns {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
constexpr double kPi = std::numbers::pi;

template <class S> using V3 = std::array<S, 3>;

template <class S> S dot(const V3<S>& a, const V3<S>& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
template <class S> V3<S> cross(const V3<S>& a, const V3<S>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
template <class S> V3<S> operator-(const V3<S>& a, const V3<S>& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
template <class S> V3<S> operator+(const V3<S>& a, const V3<S>& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
template <class S> V3<S> scale(const S& s, const V3<S>& a) { return {s * a[0], s * a[1], s * a[2]}; }

enum class SurfaceKind { MovingSphere, OscillatingSphere, StationarySphere };

inline SurfaceKind surface_kind_from_name(const std::string& s) {
  if (s == "moving_sphere") return SurfaceKind::MovingSphere;
  if (s == "oscillating_sphere") return SurfaceKind::OscillatingSphere;
  if (s == "stationary_sphere") return SurfaceKind::StationarySphere;
  throw std::invalid_argument("unknown benchmark '" + s + "'");
}
inline std::string surface_kind_name(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::MovingSphere: return "moving_sphere";
    case SurfaceKind::OscillatingSphere: return "oscillating_sphere";
    default: return "stationary_sphere";
  }
}

struct Curvature {
  Mat3 H;
  double kappa;
};

// A sphere with centre c(t) and radius R(t). All three benchmarks are of this form.
struct AnalyticSurface {
  SurfaceKind kind = SurfaceKind::MovingSphere;

  explicit AnalyticSurface(SurfaceKind k = SurfaceKind::MovingSphere) : kind(k) {}

  double final_time() const {
    switch (kind) {
      case SurfaceKind::MovingSphere: return 2.0;
      case SurfaceKind::OscillatingSphere: return 1.0;
      default: return 1.0;
    }
  }

  template <class S> V3<S> center(const S& t) const {
    if (kind == SurfaceKind::MovingSphere) return {0.2 * t, S(0.0), S(0.0)};
    return {S(0.0), S(0.0), S(0.0)};
  }
  template <class S> V3<S> center_dot(const S&) const {
    if (kind == SurfaceKind::MovingSphere) return {S(0.2), S(0.0), S(0.0)};
    return {S(0.0), S(0.0), S(0.0)};
  }
  template <class S> S radius(const S& t) const {
    using std::sin;
    if (kind == SurfaceKind::OscillatingSphere) return 1.0 + 0.25 * sin(2.0 * kPi * t);
    return S(1.0);
  }
  template <class S> S radius_dot(const S& t) const {
    using std::cos;
    if (kind == SurfaceKind::OscillatingSphere) return (0.5 * kPi) * cos(2.0 * kPi * t);
    return S(0.0);
  }
  // smooth normal extension n^e = (x-c)/|x-c|
  template <class S> V3<S> normal_ext(const V3<S>& x, const S& t) const {
    using std::sqrt;
    V3<S> r = x - center(t);
    S rho = sqrt(dot(r, r));
    return scale(S(1.0) / rho, r);
  }
  // smooth extension of the normal speed, V^e = c'·n^e + R'
  template <class S> S speed_ext(const V3<S>& x, const S& t) const {
    return dot(center_dot(t), normal_ext(x, t)) + radius_dot(t);
  }
  template <class S> V3<S> closest_point_t(const V3<S>& x, const S& t) const {
    V3<S> c = center(t);
    return c + scale(radius(t), normal_ext(x, t));
  }

  // level set D(x,t) = |x-c|^2 - R^2
  double level_set(const Vec3& x, double t) const {
    V3<double> r = V3<double>{x[0], x[1], x[2]} - center(t);
    double R = radius(t);
    return dot(r, r) - R * R;
  }
  Vec3 level_set_grad(const Vec3& x, double t) const {
    V3<double> c = center(t);
    return 2.0 * Vec3(x[0] - c[0], x[1] - c[1], x[2] - c[2]);
  }
  double level_set_dt(const Vec3& x, double t) const {
    V3<double> c = center(t), cd = center_dot(t);
    Vec3 r(x[0] - c[0], x[1] - c[1], x[2] - c[2]);
    return -2.0 * r.dot(Vec3(cd[0], cd[1], cd[2])) - 2.0 * radius(t) * radius_dot(t);
  }

  double signed_distance(const Vec3& x, double t) const {
    V3<double> c = center(t);
    double rho = (x - Vec3(c[0], c[1], c[2])).norm();
    if (rho < 1e-14) throw std::domain_error("signed_distance: point at sphere centre");
    return rho - radius(t);
  }
  Vec3 closest_point(const Vec3& x, double t) const {
    signed_distance(x, t);
    V3<double> p = closest_point_t(V3<double>{x[0], x[1], x[2]}, t);
    return Vec3(p[0], p[1], p[2]);
  }
  Vec3 normal(const Vec3& x, double t) const {
    signed_distance(x, t);
    V3<double> n = normal_ext(V3<double>{x[0], x[1], x[2]}, t);
    return Vec3(n[0], n[1], n[2]);
  }
  void require_on_surface(const Vec3& x, double t) const {
    if (std::abs(level_set(x, t)) > 1e-10) throw std::domain_error("point is not on the surface");
  }
  // n = ∇D/|∇D|, V = -∂_t D/|∇D|
  std::pair<Vec3, double> normal_and_speed(const Vec3& x, double t) const {
    require_on_surface(x, t);
    Vec3 g = level_set_grad(x, t);
    return {g / g.norm(), -level_set_dt(x, t) / g.norm()};
  }
  Curvature curvature(const Vec3& x, double t) const {
    require_on_surface(x, t);
    Vec3 n = normal(x, t);
    double R = radius(t);
    Mat3 P = Mat3::Identity() - n * n.transpose();
    return {P / R, 2.0 / R};
  }
  // material (normal) velocity V n of a surface point
  Vec3 material_velocity(const Vec3& x, double t) const {
    V3<double> xv{x[0], x[1], x[2]};
    V3<double> n = normal_ext(xv, t);
    double V = speed_ext(xv, t);
    return V * Vec3(n[0], n[1], n[2]);
  }

  // Exact position at time t of the normal-flow trajectory starting at a0 ∈ Γ(0).
  Vec3 node_position(const Vec3& a0, double t) const {
    switch (kind) {
      case SurfaceKind::OscillatingSphere: return (radius(t) / radius(0.0)) * a0;
      case SurfaceKind::StationarySphere: return a0;
      default: break;
    }
    // moving sphere: polar angle from +x obeys tan(θ/2) = tan(θ0/2) e^{0.2t}
    double c0 = a0[0];
    double e = std::exp(0.2 * t);
    double D = (1.0 + c0) + (1.0 - c0) * e * e;
    double ct = ((1.0 + c0) - (1.0 - c0) * e * e) / D;
    return Vec3(0.2 * t + ct, 2.0 * e * a0[1] / D, 2.0 * e * a0[2] / D);
  }
};

// Generic RK4 integration of dα/dt = V n along the normal flow.
inline Vec3 integrate_node_rk4(const AnalyticSurface& s, Vec3 a, double t0, double t1, double dt) {
  int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t1 - t0) / dt - 1e-12)));
  double h = (t1 - t0) / steps;
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    Vec3 k1 = s.material_velocity(a, t);
    Vec3 k2 = s.material_velocity(a + 0.5 * h * k1, t + 0.5 * h);
    Vec3 k3 = s.material_velocity(a + 0.5 * h * k2, t + 0.5 * h);
    Vec3 k4 = s.material_velocity(a + h * k3, t + h);
    a += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return a;
}

enum class Scheme { LmmDir, LmmCov, Pm };

inline Scheme scheme_from_name(const std::string& s) {
  if (s == "lmm_dir") return Scheme::LmmDir;
  if (s == "lmm_cov") return Scheme::LmmCov;
  if (s == "pm") return Scheme::Pm;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}
inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::LmmDir: return "lmm_dir";
    case Scheme::LmmCov: return "lmm_cov";
    default: return "pm";
  }
}

// which exact solution is prescribed on the surface
enum class FieldSet { Benchmark, Zero, Steady };

inline FieldSet field_set_from_name(const std::string& s) {
  if (s == "benchmark") return FieldSet::Benchmark;
  if (s == "zero") return FieldSet::Zero;
  if (s == "steady") return FieldSet::Steady;
  throw std::invalid_argument("unknown field set '" + s + "'");
}
inline std::string field_set_name(FieldSet f) {
  switch (f) {
    case FieldSet::Benchmark: return "benchmark";
    case FieldSet::Zero: return "zero";
    default: return "steady";
  }
}

struct ExactValue {
  Vec3 u;
  Mat3 grad;  // ambient Jacobian of u∘π; right-multiply by P_h for ∇_{Γh}
  double p;
  Vec3 grad_p;  // ambient gradient of p∘π
};

// Exact velocity u = curl_Γ ψ + V n and pressure p, plus manufactured data.
// Derivatives come from forward-mode AD of the closed forms.
struct ExactSolution {
  AnalyticSurface surface;
  FieldSet fields = FieldSet::Benchmark;
  double mu = 0.5;
  double rho = 1.0;
  // pm prescribes a purely tangential flow on the moving surface
  bool tangential = false;

  template <class S> S psi(const V3<S>& x, const S& t) const {
    using std::cos;
    switch (fields) {
      case FieldSet::Zero: return S(0.0);
      case FieldSet::Steady: return x[0] * x[1] + 0.5 * x[0] * x[2] * x[2];
      default: break;
    }
    if (surface.kind == SurfaceKind::OscillatingSphere) {
      return (1.0 - 2.0 * t) * (1.0 / (2.0 * kPi)) * cos(2.0 * kPi * x[0]) * cos(2.0 * kPi * x[1]) *
             cos(2.0 * kPi * x[2]);
    }
    return (x[0] - 0.2 * t * x[2]) * x[1] - 2.0 * t;
  }

  template <class S> S pressure_ext(const V3<S>& x, const S& t) const {
    using std::sin;
    switch (fields) {
      case FieldSet::Zero: return S(0.0);
      case FieldSet::Steady: return x[0] * x[1] + x[2];
      default: break;
    }
    if (surface.kind == SurfaceKind::OscillatingSphere)
      return sin(kPi * x[0]) * sin(2.0 * kPi * x[1]) * sin(2.0 * kPi * x[2]);
    return (x[0] - 0.2 * t) * x[1] + x[2];
  }

  // extension u^e = n^e × ∇ψ (+ V^e n^e unless tangential part only)
  template <class S> V3<S> velocity_ext(const V3<S>& x, const S& t, bool tang_only) const {
    using D = Dual<S, 3>;
    V3<D> xd{D::variable(x[0], 0), D::variable(x[1], 1), D::variable(x[2], 2)};
    D ps = psi(xd, D(t));
    V3<S> g{ps.d[0], ps.d[1], ps.d[2]};
    V3<S> n = surface.normal_ext(x, t);
    V3<S> u = cross(n, g);
    if (!tang_only && !(fields == FieldSet::Zero)) u = u + scale(surface.speed_ext(x, t), n);
    return u;
  }

  // u^e for the solution the scheme approximates
  template <class S> V3<S> solution_ext(const V3<S>& x, const S& t) const {
    return velocity_ext(x, t, tangential);
  }

  // E^e = sym(P^e ∇u^e P^e), a smooth extension of the surface strain
  template <class S> std::array<V3<S>, 3> strain_ext(const V3<S>& x, const S& t, bool tang_only) const {
    using D = Dual<S, 3>;
    V3<D> xd{D::variable(x[0], 0), D::variable(x[1], 1), D::variable(x[2], 2)};
    V3<D> u = velocity_ext(xd, D(t), tang_only);
    V3<S> n = surface.normal_ext(x, t);
    S J[3][3], P[3][3], A[3][3];
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        J[i][k] = u[i].d[k];
        P[i][k] = (i == k ? S(1.0) : S(0.0)) - n[i] * n[k];
      }
    S JP[3][3];
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        JP[i][k] = S(0.0);
        for (int l = 0; l < 3; ++l) JP[i][k] += J[i][l] * P[l][k];
      }
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        A[i][k] = S(0.0);
        for (int l = 0; l < 3; ++l) A[i][k] += P[i][l] * JP[l][k];
      }
    std::array<V3<S>, 3> E;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) E[i][k] = 0.5 * (A[i][k] + A[k][i]);
    return E;
  }

  // value, ambient Jacobian and time derivative of a velocity extension at (x,t)
  struct Jet {
    Vec3 u;
    Mat3 J;
    Vec3 dt;
  };
  Jet velocity_jet(const Vec3& x, double t, bool tang_only) const {
    using D = Dual<double, 4>;
    V3<D> xd{D::variable(x[0], 0), D::variable(x[1], 1), D::variable(x[2], 2)};
    V3<D> u = velocity_ext(xd, D::variable(t, 3), tang_only);
    Jet j;
    for (int i = 0; i < 3; ++i) {
      j.u[i] = u[i].v;
      for (int k = 0; k < 3; ++k) j.J(i, k) = u[i].d[k];
      j.dt[i] = u[i].d[3];
    }
    return j;
  }

  Vec3 velocity(const Vec3& x, double t) const {
    V3<double> u = solution_ext(V3<double>{x[0], x[1], x[2]}, t);
    return Vec3(u[0], u[1], u[2]);
  }
  Vec3 tangential_velocity(const Vec3& x, double t) const {
    V3<double> u = velocity_ext(V3<double>{x[0], x[1], x[2]}, t, true);
    return Vec3(u[0], u[1], u[2]);
  }
  double pressure(const Vec3& x, double t) const { return pressure_ext(V3<double>{x[0], x[1], x[2]}, t); }
  Vec3 pressure_gradient(const Vec3& x, double t) const {
    using D = Dual<double, 3>;
    V3<D> xd{D::variable(x[0], 0), D::variable(x[1], 1), D::variable(x[2], 2)};
    D p = pressure_ext(xd, D(t));
    return Vec3(p.d[0], p.d[1], p.d[2]);
  }
  double normal_speed(const Vec3& y, double t) const {
    if (fields == FieldSet::Zero) return 0.0;
    return surface.speed_ext(V3<double>{y[0], y[1], y[2]}, t);
  }
  // prescribed normal velocity of the solution (0 for the tangential flow)
  double solution_normal_speed(const Vec3& y, double t) const { return tangential ? 0.0 : normal_speed(y, t); }

  Mat3 projector(const Vec3& y, double t) const {
    Vec3 n = surface.normal(y, t);
    return Mat3::Identity() - n * n.transpose();
  }

  // tangential surface divergence of the full solution
  double div_velocity(const Vec3& y, double t) const {
    Jet j = velocity_jet(y, t, tangential);
    return (j.J * projector(y, t)).trace();
  }
  // η_1 = κV - div_Γ u, the data of the incompressibility constraint
  double eta1(const Vec3& y, double t) const {
    double kappa = 2.0 / surface.radius(t);
    return kappa * solution_normal_speed(y, t) - div_velocity(y, t);
  }
  double eta2(const Vec3& y, double t) const { return normal_speed(y, t); }

  // div_Γ E(u), using div_Γ A = Σ_jk ∂_k A_ij P_jk for any smooth extension
  Vec3 div_strain(const Vec3& y, double t, bool tang_only) const {
    using D = Dual<double, 3>;
    V3<D> xd{D::variable(y[0], 0), D::variable(y[1], 1), D::variable(y[2], 2)};
    auto E = strain_ext(xd, D(t), tang_only);
    Mat3 P = projector(y, t);
    Vec3 r = Vec3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) r[i] += E[i][j].d[k] * P(j, k);
    return r;
  }

  // Manufactured right-hand side matching the continuous counterpart of each scheme.
  Vec3 forcing(const Vec3& y, double t, Scheme scheme) const {
    if (fields == FieldSet::Zero) return Vec3::Zero();
    Vec3 n = surface.normal(y, t);
    Mat3 P = Mat3::Identity() - n * n.transpose();
    double R = surface.radius(t);
    Mat3 H = P / R;
    double kappa = 2.0 / R;
    double V = normal_speed(y, t);
    Vec3 gp = P * pressure_gradient(y, t);

    Jet jt = velocity_jet(y, t, true);
    Vec3 uT = jt.u;
    Mat3 GT = jt.J * P;
    double divT = GT.trace();

    if (scheme == Scheme::Pm) {
      // tangential flow on the moving surface; only P f is seen by the scheme
      double eta1 = -divT;
      Vec3 mat = jt.dt + jt.J * (V * n);
      Vec3 conv = 0.5 * P * (GT * uT) + 0.5 * (GT * uT) + 0.5 * divT * uT + 0.5 * eta1 * (H * uT) - 0.5 * V * uT;
      Vec3 visc = 2.0 * mu * div_strain(y, t, true);
      return P * (rho * (mat + conv) - visc) + gp;
    }

    Jet j = velocity_jet(y, t, false);
    Vec3 u = j.u;
    Mat3 G = j.J * P;
    Vec3 mat = j.dt + j.J * (V * n);
    Vec3 visc = 2.0 * mu * div_strain(y, t, false);
    Vec3 conv;
    if (scheme == Scheme::LmmDir) {
      conv = G * uT + 0.5 * divT * u - 0.5 * V * u;
    } else {
      double eta1 = kappa * V - G.trace();
      Vec3 Hu = H * u;
      conv = 0.5 * P * (G * uT) + 0.5 * (GT * uT) + 0.5 * divT * uT - 0.5 * V * Hu + 0.5 * u.dot(Hu) * n +
             0.5 * eta1 * Hu - 0.5 * V * uT;
    }
    return rho * (mat + conv) - visc + gp;
  }

  // exact fields pulled back to Γ_h via the closest point, with Γ_h-ambient Jacobians
  ExactValue lifted(const Vec3& x, double t) const {
    using D = Dual<double, 3>;
    V3<D> xd{D::variable(x[0], 0), D::variable(x[1], 1), D::variable(x[2], 2)};
    V3<D> y = surface.closest_point_t(xd, D(t));
    V3<D> u = solution_ext(y, D(t));
    D p = pressure_ext(y, D(t));
    ExactValue e;
    for (int i = 0; i < 3; ++i) {
      e.u[i] = u[i].v;
      for (int k = 0; k < 3; ++k) e.grad(i, k) = u[i].d[k];
      e.grad_p[i] = p.d[i];
    }
    e.p = p.v;
    return e;
  }
};

}  // namespace surfns
