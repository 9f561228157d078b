#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "surfns/geometry.hpp"
#include "surfns/quadrature.hpp"

using namespace surfns;

namespace {

const AnalyticSurface kMoving(SurfaceKind::MovingSphere);
const AnalyticSurface kOsc(SurfaceKind::OscillatingSphere);

// random point on Γ(t)
Vec3 random_surface_point(const AnalyticSurface& s, double t, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 d(g(rng), g(rng), g(rng));
  d.normalize();
  V3<double> c = s.center(t);
  return Vec3(c[0], c[1], c[2]) + s.radius(t) * d;
}

ExactSolution make_exact(SurfaceKind k, double mu = 0.5) {
  ExactSolution ex;
  ex.surface = AnalyticSurface(k);
  ex.mu = mu;
  return ex;
}

Vec3 to_vec(const V3<double>& v) { return Vec3(v[0], v[1], v[2]); }

}  // namespace

TEST(Geometry, SignedDistanceExamples) {
  EXPECT_NEAR(kMoving.signed_distance(Vec3(2, 0, 0), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(kOsc.signed_distance(Vec3(0, 0, 0.5), 0.0), -0.5, 1e-15);
  EXPECT_NEAR(kOsc.signed_distance(Vec3(1.25, 0, 0), 0.25), 0.0, 1e-14);
  EXPECT_THROW(kMoving.signed_distance(Vec3(0.2, 0, 0), 1.0), std::domain_error);
}

TEST(Geometry, ClosestPointExamples) {
  EXPECT_LT((kMoving.closest_point(Vec3(2, 0, 0), 0.0) - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((kMoving.closest_point(Vec3(0.6, 0, 0), 2.0) - Vec3(1.4, 0, 0)).norm(), 1e-14);
  EXPECT_LT((kOsc.closest_point(Vec3(0, 3, 0), 0.5) - Vec3(0, 1, 0)).norm(), 1e-14);
}

TEST(Geometry, NormalAndSpeedExamples) {
  auto [n1, V1] = kMoving.normal_and_speed(Vec3(1, 0, 0), 0.0);
  EXPECT_LT((n1 - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_NEAR(V1, 0.2, 1e-15);
  auto [n2, V2] = kMoving.normal_and_speed(Vec3(0, 1, 0), 0.0);
  EXPECT_LT((n2 - Vec3(0, 1, 0)).norm(), 1e-15);
  EXPECT_NEAR(V2, 0.0, 1e-15);
  auto [n3, V3v] = kOsc.normal_and_speed(Vec3(0, 0, 1), 0.0);
  EXPECT_LT((n3 - Vec3(0, 0, 1)).norm(), 1e-15);
  EXPECT_NEAR(V3v, M_PI / 2.0, 1e-14);
  EXPECT_THROW(kMoving.normal_and_speed(Vec3(0.5, 0, 0), 0.0), std::domain_error);
}

TEST(Geometry, CurvatureExamples) {
  Curvature c = kMoving.curvature(Vec3(0, 0, 1), 0.0);
  EXPECT_NEAR(c.kappa, 2.0, 1e-15);
  EXPECT_NEAR(c.H.trace(), 2.0, 1e-14);
  EXPECT_LT((c.H - c.H.transpose()).norm(), 1e-15);
  Curvature co = kOsc.curvature(Vec3(1.25, 0, 0), 0.25);
  EXPECT_NEAR(co.kappa, 1.6, 1e-14);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    double t = 0.1 * i;
    Vec3 x = random_surface_point(kOsc, t, rng);
    Curvature k = kOsc.curvature(x, t);
    EXPECT_LT((k.H * kOsc.normal(x, t)).norm(), 1e-14);
  }
}

TEST(Geometry, DistanceInvariants) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  for (const auto* s : {&kMoving, &kOsc}) {
    for (int i = 0; i < 100; ++i) {
      double t = 0.01 * i;
      Vec3 x(u(rng), u(rng), u(rng));
      // |∇d| = 1 by central differences
      const double e = 1e-6;
      Vec3 g;
      for (int k = 0; k < 3; ++k) {
        Vec3 a = x, b = x;
        a[k] += e;
        b[k] -= e;
        g[k] = (s->signed_distance(a, t) - s->signed_distance(b, t)) / (2 * e);
      }
      EXPECT_NEAR(g.norm(), 1.0, 1e-8);
      // closest point is idempotent and lies on the surface
      Vec3 p = s->closest_point(x, t);
      EXPECT_LT((s->closest_point(p, t) - p).norm(), 1e-14);
      EXPECT_NEAR(s->signed_distance(p, t), 0.0, 1e-14);
      EXPECT_NEAR(std::abs(s->signed_distance(x, t)), (x - p).norm(), 1e-13);
    }
  }
}

TEST(Geometry, ClosedFormNormalAndSpeedMatchLevelSet) {
  std::mt19937_64 rng(3);
  for (const auto* s : {&kMoving, &kOsc}) {
    for (double t : {0.0, 0.3, 0.65, 1.0}) {
      for (int i = 0; i < 100; ++i) {
        Vec3 x = random_surface_point(*s, t, rng);
        auto [n, V] = s->normal_and_speed(x, t);
        EXPECT_LT((n - s->normal(x, t)).norm(), 1e-13);
        EXPECT_NEAR(V, s->speed_ext(V3<double>{x[0], x[1], x[2]}, t), 1e-13);
        // V = -∂_t D/|∇D| via finite differences in time
        const double e = 1e-6;
        double Dt = (s->level_set(x, t + e) - s->level_set(x, t - e)) / (2 * e);
        EXPECT_NEAR(V, -Dt / s->level_set_grad(x, t).norm(), 1e-8);
      }
    }
  }
}

TEST(Geometry, NodeTrajectoriesFollowNormalFlow) {
  EXPECT_LT((kMoving.node_position(Vec3(1, 0, 0), 2.0) - Vec3(1.4, 0, 0)).norm(), 1e-14);
  EXPECT_LT((kOsc.node_position(Vec3(0, 1, 0), 0.25) - Vec3(0, 1.25, 0)).norm(), 1e-14);
  std::mt19937_64 rng(5);
  for (const auto* s : {&kMoving, &kOsc}) {
    for (int i = 0; i < 10; ++i) {
      Vec3 a = random_surface_point(*s, 0.0, rng);
      for (double t : {0.4, 1.0}) {
        Vec3 x = s->node_position(a, t);
        EXPECT_NEAR(s->level_set(x, t), 0.0, 1e-13);
        Vec3 r = integrate_node_rk4(*s, a, 0.0, t, 1e-3);
        EXPECT_LT((r - x).norm(), 1e-10);
        // velocity is normal: d/dt x = V n
        const double e = 1e-5;
        Vec3 v = (s->node_position(a, t + e) - s->node_position(a, t - e)) / (2 * e);
        EXPECT_LT((v - s->material_velocity(x, t)).norm(), 1e-8);
      }
    }
  }
}

TEST(Geometry, ExactFieldExamples) {
  ExactSolution ex = make_exact(SurfaceKind::MovingSphere);
  EXPECT_LT(ex.tangential_velocity(Vec3(0, 0, 1), 0.0).norm(), 1e-15);
  EXPECT_NEAR(ex.pressure(Vec3(0, 0, 1), 0.0), 1.0, 1e-15);
  // tangential pressure gradient vanishes at the pole
  Vec3 gp = ex.projector(Vec3(0, 0, 1), 0.0) * ex.pressure_gradient(Vec3(0, 0, 1), 0.0);
  EXPECT_LT(gp.norm(), 1e-15);
}

TEST(Geometry, ExactVelocityDecomposition) {
  std::mt19937_64 rng(9);
  for (auto k : {SurfaceKind::MovingSphere, SurfaceKind::OscillatingSphere}) {
    ExactSolution ex = make_exact(k);
    for (int i = 0; i < 50; ++i) {
      double t = 0.02 * i;
      Vec3 x = random_surface_point(ex.surface, t, rng);
      Vec3 n = ex.surface.normal(x, t);
      EXPECT_NEAR(ex.tangential_velocity(x, t).dot(n), 0.0, 1e-13);
      EXPECT_NEAR(ex.velocity(x, t).dot(n), ex.normal_speed(x, t), 1e-13);
      // the tangential part is divergence free
      ExactSolution::Jet j = ex.velocity_jet(x, t, true);
      EXPECT_NEAR((j.J * ex.projector(x, t)).trace(), 0.0, 1e-11);
      // the full field satisfies div u = κ V, so η₁ = 0
      EXPECT_NEAR(ex.eta1(x, t), 0.0, 1e-11);
    }
  }
}

TEST(Geometry, PressureHasZeroMeanAtSeveralTimes) {
  // tensor Gauss rule in spherical coordinates on Γ(t)
  std::vector<double> xg, wg;
  gauss_legendre01(40, xg, wg);
  for (auto k : {SurfaceKind::MovingSphere, SurfaceKind::OscillatingSphere}) {
    ExactSolution ex = make_exact(k);
    for (double t : {0.0, 0.37, 0.9}) {
      V3<double> c = ex.surface.center(t);
      double R = ex.surface.radius(t), s = 0.0;
      for (size_t i = 0; i < xg.size(); ++i)
        for (size_t j = 0; j < xg.size(); ++j) {
          double th = M_PI * xg[i], ph = 2 * M_PI * xg[j];
          Vec3 x = Vec3(c[0], c[1], c[2]) + R * Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
          s += wg[i] * wg[j] * 2 * M_PI * M_PI * R * R * std::sin(th) * ex.pressure(x, t);
        }
      EXPECT_NEAR(s, 0.0, 1e-10);
    }
  }
}

TEST(Geometry, ZeroFieldsGiveZeroForcing) {
  ExactSolution ex = make_exact(SurfaceKind::OscillatingSphere);
  ex.fields = FieldSet::Zero;
  for (auto sch : {Scheme::LmmDir, Scheme::LmmCov, Scheme::Pm}) {
    EXPECT_EQ(ex.forcing(Vec3(0, 0, 1), 0.1, sch).norm(), 0.0);
  }
  EXPECT_EQ(ex.eta1(Vec3(1, 0, 0), 0.3), 0.0);
  EXPECT_EQ(ex.eta2(Vec3(1, 0, 0), 0.3), 0.0);
}

// Independent finite-difference evaluation of the directional-scheme forcing.
TEST(Geometry, ForcingMatchesFiniteDifferenceOracle) {
  ExactSolution ex = make_exact(SurfaceKind::MovingSphere, 0.5);
  const double e = 1e-4;
  auto uext = [&](const Vec3& x, double t, bool tang) {
    return to_vec(ex.velocity_ext(V3<double>{x[0], x[1], x[2]}, t, tang));
  };
  auto grad = [&](const Vec3& x, double t, bool tang) {
    Mat3 J;
    for (int k = 0; k < 3; ++k) {
      Vec3 a = x, b = x;
      a[k] += e;
      b[k] -= e;
      J.col(k) = (uext(a, t, tang) - uext(b, t, tang)) / (2 * e);
    }
    return J;
  };
  std::mt19937_64 rng(21);
  for (int i = 0; i < 10; ++i) {
    double t = 0.15 * i + 0.05;
    Vec3 y = random_surface_point(ex.surface, t, rng);
    Vec3 n = ex.surface.normal(y, t);
    Mat3 P = Mat3::Identity() - n * n.transpose();
    double V = ex.normal_speed(y, t);
    Vec3 u = uext(y, t, false), uT = uext(y, t, true);
    Mat3 G = grad(y, t, false) * P;
    double divT = (grad(y, t, true) * P).trace();
    Vec3 mat = (uext(y + e * V * n, t + e, false) - uext(y - e * V * n, t - e, false)) / (2 * e);
    // div_Γ E by differencing the strain extension
    Vec3 dE = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
      Vec3 a = y, b = y;
      a[k] += e;
      b[k] -= e;
      auto Ea = ex.strain_ext(V3<double>{a[0], a[1], a[2]}, t, false);
      auto Eb = ex.strain_ext(V3<double>{b[0], b[1], b[2]}, t, false);
      for (int r = 0; r < 3; ++r)
        for (int j = 0; j < 3; ++j) dE[r] += (Ea[r][j] - Eb[r][j]) / (2 * e) * P(j, k);
    }
    Vec3 gp;
    for (int k = 0; k < 3; ++k) {
      Vec3 a = y, b = y;
      a[k] += e;
      b[k] -= e;
      gp[k] = (ex.pressure(a, t) - ex.pressure(b, t)) / (2 * e);
    }
    Vec3 conv = G * uT + 0.5 * divT * u - 0.5 * V * u;
    Vec3 f = mat + conv - 2.0 * ex.mu * dE + P * gp;
    EXPECT_LT((f - ex.forcing(y, t, Scheme::LmmDir)).norm(), 1e-6) << "t=" << t;
  }
}

TEST(Geometry, DensityScalesInertialForcing) {
  ExactSolution a = make_exact(SurfaceKind::MovingSphere, 0.0), b = a;
  b.rho = 3.0;
  a.fields = b.fields = FieldSet::Benchmark;
  Vec3 y(0, 0.6, 0.8);
  Vec3 gp = a.projector(y, 0.2) * a.pressure_gradient(y, 0.2);
  Vec3 fa = a.forcing(y, 0.2, Scheme::LmmCov) - gp, fb = b.forcing(y, 0.2, Scheme::LmmCov) - gp;
  EXPECT_LT((fb - 3.0 * fa).norm(), 1e-12);
}

TEST(Geometry, NameParsing) {
  EXPECT_EQ(surface_kind_from_name("oscillating_sphere"), SurfaceKind::OscillatingSphere);
  EXPECT_EQ(scheme_from_name("lmm_cov"), Scheme::LmmCov);
  EXPECT_EQ(field_set_from_name("zero"), FieldSet::Zero);
  EXPECT_THROW(surface_kind_from_name("torus"), std::invalid_argument);
  EXPECT_THROW(scheme_from_name("foo"), std::invalid_argument);
  EXPECT_EQ(surface_kind_name(SurfaceKind::MovingSphere), "moving_sphere");
  EXPECT_EQ(scheme_name(Scheme::Pm), "pm");
}
