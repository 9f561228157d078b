#include <gtest/gtest.h>

#include <random>

#include "surfns/checks.hpp"

using namespace surfns;

namespace {

struct Discretization {
  SurfaceMesh mesh;
  TaylorHoodSpace V;
  FormContext c;
  Discretization(SurfaceKind k, int level, int kg, double t = 0.0, int ku = 2, int kl = 2, int threads = 1)
      : mesh(build_initial_mesh(AnalyticSurface(k), level, kg).evolve(t)),
        V(mesh, ku, ku - 1, kl, true),
        c(mesh, V, -1, threads) {}
};

VecX constant_field(const TaylorHoodSpace& V, const Vec3& a) {
  VecX u(V.n_u());
  for (int i = 0; i < V.n_vel_nodes(); ++i) u.segment<3>(3 * i) = a;
  return u;
}

double sym_defect(const SpMat& A) { return SpMat(A - SpMat(A.transpose())).norm() / std::max(1e-300, A.norm()); }

}  // namespace

TEST(Forms, MassMatrix) {
  Discretization d(SurfaceKind::MovingSphere, 2, 2);
  SpMat M = assemble_mass(d.c);
  VecX e1 = constant_field(d.V, Vec3(1, 0, 0));
  double area = d.mesh.area(d.c.rule.degree);
  EXPECT_NEAR(e1.dot(M * e1), area, 1e-12 * area);
  EXPECT_LT(std::abs(e1.dot(M * e1) - 4 * M_PI) / (4 * M_PI), 1e-4);
  EXPECT_LT(sym_defect(M), 1e-14);
  Eigen::SimplicialLLT<SpMat> llt(M);
  EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(Forms, TransportFormOnStationaryAndOscillatingSpheres) {
  Discretization st(SurfaceKind::StationarySphere, 1, 2);
  EXPECT_EQ(assemble_g(st.c).norm(), 0.0);
  // oscillating sphere at t=0: div(V n) = V κ = π everywhere
  Discretization os(SurfaceKind::OscillatingSphere, 2, 2, 0.0);
  VecX e1 = constant_field(os.V, Vec3(1, 0, 0));
  double area = os.mesh.area(os.c.rule.degree);
  EXPECT_NEAR(e1.dot(assemble_g(os.c) * e1) / (area * M_PI), 1.0, 1e-3);
  // moving sphere: ∫ div(0.2 n₁ n) = ∫ 0.2 n₁ κ vanishes by symmetry
  Discretization mv(SurfaceKind::MovingSphere, 2, 2, 0.0);
  VecX m1 = constant_field(mv.V, Vec3(1, 0, 0));
  EXPECT_LT(std::abs(m1.dot(assemble_g(mv.c) * m1)), 1e-4);
}

TEST(Forms, StrainForm) {
  Discretization d(SurfaceKind::MovingSphere, 1, 2, 0.7);
  SpMat A = assemble_strain(d.c);
  EXPECT_LT(sym_defect(A), 1e-12);
  EXPECT_LT((A * constant_field(d.V, Vec3(0.3, -1, 2))).norm(), 1e-11);
  for (unsigned s = 0; s < 50; ++s) {
    VecX x = random_vector(d.V.n_u(), s);
    EXPECT_GE(x.dot(A * x), -1e-12 * x.squaredNorm());
  }
  SpMat AT = assemble_tangential_strain(d.c);
  EXPECT_LT(sym_defect(AT), 1e-12);
}

TEST(Forms, PenaltyForm) {
  EXPECT_DOUBLE_EQ(penalty_tau(0.5), 2.0);
  Discretization d(SurfaceKind::MovingSphere, 2, 2, 0.4);
  SpMat AT = assemble_tangential_strain(d.c);
  EXPECT_LT(SpMat(assemble_penalty_form(d.c, 0.5, 0.0) - AT).norm(), 1e-14 * AT.norm());
  // a field aligned with the exact normal: penalty energy ≈ ‖u‖²
  VecX u = interpolate_vector(d.V, d.mesh, [&](const Vec3& y) { return d.mesh.improved_normal(y); }).coeffs;
  SpMat N = assemble_normal_penalty(d.c), M = assemble_mass(d.c);
  EXPECT_NEAR(u.dot(N * u) / u.dot(M * u), 1.0, 1e-3);
  double tau = 37.0;
  SpMat A = assemble_penalty_form(d.c, 0.5, tau);
  EXPECT_NEAR(u.dot(A * u), u.dot(AT * u) + tau * u.dot(N * u), 1e-9 * u.dot(A * u));
}

TEST(Forms, ConstraintBlocks) {
  Discretization d(SurfaceKind::MovingSphere, 1, 2, 0.3);
  SpMat Bp = assemble_bp(d.c);
  VecX one = VecX::Ones(d.V.n_p());
  EXPECT_LT((SpMat(Bp.transpose()) * one).cwiseAbs().maxCoeff(), 1e-13);
  // ∫ div_{Γh}(id) = ∫ tr P_h = 2 area, with the isoparametric coordinate field
  SpMat Bd = assemble_bdiv(d.c);
  VecX x = interpolate_vector(d.V, d.mesh, [](const Vec3& y) { return y; }).coeffs;
  double area = d.mesh.area(d.c.rule.degree);
  EXPECT_NEAR(one.dot(Bd * x), 2.0 * area, 1e-12 * area);
}

TEST(Forms, MultiplierBlockIgnoresTangentialFields) {
  // k_u = 3 has one bubble node per element, so a bubble field lives on a single flat triangle
  Discretization d(SurfaceKind::MovingSphere, 0, 1, 0.0, 3, 2);
  SpMat Bl = assemble_bl(d.c);
  const Topology& T = d.mesh.topology();
  const int nloc = d.V.vel.nloc();
  for (int el = 0; el < T.num_tris(); ++el) {
    int node = d.V.vel.layout.nodes_of(el)[nloc - 1];
    Vec3 n = d.mesh.element_geometry(el, 0.3, 0.3).n;
    Vec3 tdir = n.unitOrthogonal();
    VecX w = VecX::Zero(d.V.n_u());
    w.segment<3>(3 * node) = tdir;
    EXPECT_LT((Bl * w).cwiseAbs().maxCoeff(), 1e-15);
    w.segment<3>(3 * node) = n;
    EXPECT_GT((Bl * w).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(Forms, BlocksMatchBruteForceQuadrature) {
  CheckResult r = check_block_equivalence();
  EXPECT_TRUE(r.pass) << r.detail;
  EXPECT_LT(r.value, 1e-12);
}

TEST(Forms, ConvectiveFormsVanishForZeroData) {
  Discretization d(SurfaceKind::OscillatingSphere, 1, 2, 0.2);
  VecX z = VecX::Zero(d.V.n_u()), e = VecX::Zero(d.V.n_vel_nodes());
  EXPECT_EQ(assemble_convective_dir(d.c, z, e).norm(), 0.0);
  EXPECT_EQ(assemble_convective_cov(d.c, z, e, e).norm(), 0.0);
}

TEST(Forms, ConvectiveFormsAreSkew) {
  Discretization d(SurfaceKind::StationarySphere, 1, 2);
  VecX z = random_vector(d.V.n_u(), 3), zero = VecX::Zero(d.V.n_vel_nodes());
  VecX eta1 = random_vector(d.V.n_vel_nodes(), 4);
  SpMat Cd = assemble_convective_dir(d.c, z, zero);
  SpMat Cs = assemble_convective_cov(d.c, z, eta1, zero, ConvParts{true, false});
  for (unsigned s = 10; s < 20; ++s) {
    VecX u = random_vector(d.V.n_u(), s);
    EXPECT_LT(std::abs(u.dot(Cd * u)), 1e-12 * u.squaredNorm());
    EXPECT_LT(std::abs(u.dot(Cs * u)), 1e-12 * u.squaredNorm());
  }
  CheckResult r = check_skew_symmetry();
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Forms, CovariantFormConvergesToAnalyticGeometry) {
  // vᵀC(z)u with exact P, n and H at the closest point versus the assembled matrix
  auto defect = [](int level) {
    Discretization d(SurfaceKind::StationarySphere, level, 2);
    auto smooth = [](const Vec3& y) { return Vec3(y[1] * y[2], 1 - y[0] * y[0], y[0] + y[1]); };
    VecX z = interpolate_vector(d.V, d.mesh, smooth).coeffs;
    VecX u = interpolate_vector(d.V, d.mesh, [](const Vec3& y) { return Vec3(y[2], y[0] * y[1], -y[1]); }).coeffs;
    VecX v = interpolate_vector(d.V, d.mesh, [](const Vec3& y) { return Vec3(1 + y[0], y[2] * y[2], y[1]); }).coeffs;
    VecX eta1 = interpolate_on_velocity_nodes(d.V, d.mesh, [](const Vec3& y) { return y[0]; });
    VecX eta2 = VecX::Zero(d.V.n_vel_nodes());
    double assembled = v.dot(assemble_convective_cov(d.c, z, eta1, eta2) * u);
    double exact = 0.0;
    for (int e = 0; e < d.c.nelem(); ++e)
      for (int q = 0; q < d.c.nquad(); ++q) {
        size_t i = d.c.idx(e, q);
        Vec3 y = d.mesh.surface.closest_point(d.c.geo[i].x, 0.0);
        Vec3 n = d.mesh.surface.normal(y, 0.0);
        Mat3 P = Mat3::Identity() - n * n.transpose(), H = d.mesh.surface.curvature(y, 0.0).H;
        Vec3 zq = d.c.vel_value(z, e, q), uq = d.c.vel_value(u, e, q), vq = d.c.vel_value(v, e, q);
        Vec3 dzu = d.c.vel_grad(u, e, q) * zq, dzv = d.c.vel_grad(v, e, q) * zq;
        double e1 = d.c.vnode_value(eta1, e, q);
        double s = 0.5 * (vq.dot(P * dzu) - uq.dot(P * dzv)) - 0.5 * vq.dot(H * zq) * n.dot(uq) +
                   0.5 * vq.dot(n) * (H * zq).dot(uq) + 0.5 * e1 * vq.dot(H * uq);
        exact += d.c.w[i] * s;
      }
    return std::abs(assembled - exact);
  };
  double prev = defect(1);
  for (int l = 2; l <= 3; ++l) {
    double cur = defect(l);
    EXPECT_LT(cur, prev) << "level " << l;
    prev = cur;
  }
}

TEST(Forms, MultiplierLoadVanishesBySymmetry) {
  Discretization d(SurfaceKind::MovingSphere, 2, 2, 0.0);
  ExactSolution ex;
  ex.surface = d.mesh.surface;
  SnapshotData data = build_data(ex, Scheme::LmmDir, d.mesh, d.V);
  VecX fl = assemble_scalar_load(d.c, Field::Multiplier, data.vn);
  EXPECT_LT(std::abs(fl.sum()), 1e-6);
}

TEST(Forms, ZeroDataGivesZeroLoads) {
  Discretization d(SurfaceKind::OscillatingSphere, 1, 2, 0.3);
  ExactSolution ex;
  ex.surface = d.mesh.surface;
  ex.fields = FieldSet::Zero;
  SnapshotData data = build_data(ex, Scheme::LmmCov, d.mesh, d.V);
  EXPECT_EQ(data.f.norm(), 0.0);
  EXPECT_EQ(assemble_scalar_load(d.c, Field::Pressure, data.eta1).norm(), 0.0);
  EXPECT_EQ(assemble_scalar_load(d.c, Field::Multiplier, data.vn).norm(), 0.0);
}

TEST(Forms, TransportIdentityAndMutation) {
  CheckResult ok = check_transport();
  EXPECT_TRUE(ok.pass) << ok.detail;
  // a sign error in the transport form must be caught
  CheckResult bad = check_transport([](const FormContext& c) { return SpMat(-assemble_g(c)); });
  EXPECT_FALSE(bad.pass) << bad.detail;
  // random w, v at level 1 with δ = 1e-4
  SurfaceMesh m = build_initial_mesh(AnalyticSurface(SurfaceKind::OscillatingSphere), 1, 2);
  TaylorHoodSpace V(m, 2, 1, 2, true);
  VecX w = random_vector(V.n_u(), 1), v = random_vector(V.n_u(), 2);
  SurfaceMesh m0 = m.evolve(0.3);
  FormContext c0(m0, V);
  double wGv = std::abs(w.dot(assemble_g(c0) * v));
  EXPECT_LE(verify_transport(m, V, 0.3, w, v, 1e-4), 1e-6 * wGv + 1e-10);
  // stationary surface: both sides vanish
  SurfaceMesh ms = build_initial_mesh(AnalyticSurface(SurfaceKind::StationarySphere), 1, 2);
  EXPECT_LT(verify_transport(ms, V, 0.5, w, v, 1e-3), 1e-10);
}

TEST(Forms, ThreadCountDoesNotChangeMatrices) {
  Discretization a(SurfaceKind::OscillatingSphere, 1, 2, 0.3, 2, 2, 1);
  Discretization b(SurfaceKind::OscillatingSphere, 1, 2, 0.3, 2, 2, 4);
  VecX z = random_vector(a.V.n_u(), 8), e1 = random_vector(a.V.n_vel_nodes(), 9);
  std::vector<std::pair<SpMat, SpMat>> pairs{
      {assemble_mass(a.c), assemble_mass(b.c)},
      {assemble_g(a.c), assemble_g(b.c)},
      {assemble_strain(a.c), assemble_strain(b.c)},
      {assemble_tangential_strain(a.c), assemble_tangential_strain(b.c)},
      {assemble_bp(a.c), assemble_bp(b.c)},
      {assemble_bl(a.c), assemble_bl(b.c)},
      {assemble_convective_cov(a.c, z, e1, e1), assemble_convective_cov(b.c, z, e1, e1)}};
  for (auto& [x, y] : pairs) EXPECT_LE(SpMat(x - y).norm(), 1e-14 * std::max(1.0, x.norm()));
}
