#pragma once
// Icosphere triangulations with curved Lagrange geometry that follow the surface motion.
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "surfns/geometry.hpp"
#include "surfns/lagrange.hpp"
#include "surfns/quadrature.hpp"

namespace surfns {

struct Topology {
  std::vector<Vec3> vertices;  // flat icosphere vertices on the unit sphere
  std::vector<std::array<int, 3>> tris;
  std::vector<std::array<int, 2>> edges;      // (lo, hi) global vertex ids
  std::vector<std::array<int, 3>> tri_edges;  // local edges (0,1), (1,2), (2,0)

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_tris() const { return static_cast<int>(tris.size()); }

  void build_edges() {
    std::map<std::pair<int, int>, int> id;
    edges.clear();
    tri_edges.assign(tris.size(), {0, 0, 0});
    for (size_t t = 0; t < tris.size(); ++t)
      for (int le = 0; le < 3; ++le) {
        int a = tris[t][le], b = tris[t][(le + 1) % 3];
        auto key = std::minmax(a, b);
        auto it = id.find(key);
        if (it == id.end()) {
          it = id.emplace(key, static_cast<int>(edges.size())).first;
          edges.push_back({key.first, key.second});
        }
        tri_edges[t][le] = it->second;
      }
  }
};

inline Topology icosahedron() {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  Topology T;
  T.vertices = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (auto& v : T.vertices) v.normalize();
  T.tris = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
            {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
            {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& t : T.tris) {
    const Vec3 &a = T.vertices[t[0]], &b = T.vertices[t[1]], &c = T.vertices[t[2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0) std::swap(t[1], t[2]);
  }
  T.build_edges();
  return T;
}

// One bisection step; new vertices are projected radially onto the unit sphere.
inline Topology refine(const Topology& in) {
  Topology out;
  out.vertices = in.vertices;
  for (auto& e : in.edges) out.vertices.push_back((in.vertices[e[0]] + in.vertices[e[1]]).normalized());
  const int V = in.num_vertices();
  for (int t = 0; t < in.num_tris(); ++t) {
    auto v = in.tris[t];
    int m01 = V + in.tri_edges[t][0], m12 = V + in.tri_edges[t][1], m20 = V + in.tri_edges[t][2];
    out.tris.push_back({v[0], m01, m20});
    out.tris.push_back({m01, v[1], m12});
    out.tris.push_back({m20, m12, v[2]});
    out.tris.push_back({m01, m12, m20});
  }
  out.build_edges();
  return out;
}

inline Topology icosphere(int level) {
  if (level < 0) throw std::invalid_argument("refinement level must be >= 0");
  Topology T = icosahedron();
  for (int l = 0; l < level; ++l) T = refine(T);
  return T;
}

// Degree-k Lagrange node numbering shared across elements:
// vertices, then k-1 nodes per edge (ordered lo→hi), then face-interior nodes.
struct NodeLayout {
  int degree = 1;
  int nloc = 3;
  int num_nodes = 0;
  std::vector<int> elem_nodes;  // element-major, nloc per element
  std::vector<Vec3> flat_points;  // position on the piecewise-flat icosphere

  NodeLayout() = default;
  NodeLayout(const Topology& T, int k) : degree(k) {
    LagrangeBasis B(k);
    nloc = B.size();
    const int V = T.num_vertices(), E = T.num_edges(), F = T.num_tris();
    const int pe = k - 1, pf = B.per_face();
    num_nodes = V + E * pe + F * pf;
    elem_nodes.assign(static_cast<size_t>(F) * nloc, -1);
    flat_points.assign(num_nodes, Vec3::Zero());
    const int lv[3][2] = {{0, 1}, {1, 2}, {2, 0}};
    for (int t = 0; t < F; ++t) {
      int* en = &elem_nodes[static_cast<size_t>(t) * nloc];
      for (int a = 0; a < 3; ++a) en[a] = T.tris[t][a];
      for (int le = 0; le < 3; ++le) {
        int ga = T.tris[t][lv[le][0]], gb = T.tris[t][lv[le][1]];
        int e = T.tri_edges[t][le];
        for (int i = 0; i < pe; ++i) {
          int gi = ga < gb ? i : pe - 1 - i;
          en[3 + le * pe + i] = V + e * pe + gi;
        }
      }
      for (int j = 0; j < pf; ++j) en[3 + 3 * pe + j] = V + E * pe + t * pf + j;
      const Vec3 &X0 = T.vertices[T.tris[t][0]], &X1 = T.vertices[T.tris[t][1]], &X2 = T.vertices[T.tris[t][2]];
      for (int a = 0; a < nloc; ++a) {
        double xi = B.nodes()[a][0], eta = B.nodes()[a][1];
        flat_points[en[a]] = (1.0 - xi - eta) * X0 + xi * X1 + eta * X2;
      }
    }
  }
  const int* nodes_of(int elem) const { return &elem_nodes[static_cast<size_t>(elem) * nloc]; }
};

// Geometric quantities of Γ_h at one reference point of one element.
struct GeoSample {
  Vec3 x;
  Eigen::Matrix<double, 3, 2> J;
  double meas = 0.0;  // √det(JᵀJ)
  Vec3 n;
  Mat3 P;
  Eigen::Matrix<double, 3, 2> T;  // ∇_{Γh} φ = T ∇̂φ
  Mat3 H;                         // discrete Weingarten map
  Vec3 W;                         // mesh velocity
  double divW = 0.0;              // div_{Γh} of the mesh velocity
};

struct MeshStatic {
  std::shared_ptr<const Topology> topo;
  NodeLayout geo;
  LagrangeBasis basis;
  std::vector<Vec3> nodes0;  // geometric nodes on Γ(0)
};

class SurfaceMesh {
 public:
  AnalyticSurface surface;
  int level = 0;
  int kg = 1;
  double t = 0.0;
  double t_max = 0.0;
  std::shared_ptr<const MeshStatic> st;
  std::vector<Vec3> pos;
  std::vector<Vec3> vel;

  int num_elements() const { return st->topo->num_tris(); }
  int num_geo_nodes() const { return st->geo.num_nodes; }
  const NodeLayout& geo_layout() const { return st->geo; }
  const LagrangeBasis& geo_basis() const { return st->basis; }
  const Topology& topology() const { return *st->topo; }

  // element geometry from a precomputed geometric basis sample
  GeoSample sample(int elem, const BasisSample& b) const {
    const int* en = st->geo.nodes_of(elem);
    const int nl = st->geo.nloc;
    GeoSample g;
    g.x.setZero();
    g.J.setZero();
    g.W.setZero();
    Vec3 d2[3] = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    for (int a = 0; a < nl; ++a) {
      const Vec3& X = pos[en[a]];
      g.x += b.value[a] * X;
      g.J.col(0) += b.grad(a, 0) * X;
      g.J.col(1) += b.grad(a, 1) * X;
      for (int c = 0; c < 3; ++c) d2[c] += b.hess(a, c) * X;
      g.W += b.value[a] * vel[en[a]];
    }
    Eigen::Matrix2d G = g.J.transpose() * g.J;
    double det = G.determinant();
    if (!(det > 1e-300)) throw std::runtime_error("degenerate element Jacobian (rank < 2) in element " + std::to_string(elem));
    g.meas = std::sqrt(det);
    Eigen::Matrix2d Gi = G.inverse();
    Vec3 N = g.J.col(0).cross(g.J.col(1));
    double nN = N.norm();
    g.n = N / nN;
    g.P = Mat3::Identity() - g.n * g.n.transpose();
    g.T = g.J * Gi;
    // ∂_a n = P ∂_a N / |N|, ∂_a N = ∂_a J_0 × J_1 + J_0 × ∂_a J_1
    const Vec3& Fxx = d2[0];
    const Vec3& Fxy = d2[1];
    const Vec3& Fyy = d2[2];
    Eigen::Matrix<double, 3, 2> dn;
    dn.col(0) = g.P * (Fxx.cross(g.J.col(1)) + g.J.col(0).cross(Fxy)) / nN;
    dn.col(1) = g.P * (Fxy.cross(g.J.col(1)) + g.J.col(0).cross(Fyy)) / nN;
    Mat3 H = dn * g.T.transpose();
    g.H = 0.5 * (H + H.transpose());
    Mat3 gradW = Mat3::Zero();
    for (int a = 0; a < nl; ++a) gradW += vel[en[a]] * (g.T * b.grad.row(a).transpose()).transpose();
    g.divW = gradW.trace();
    return g;
  }
  GeoSample element_geometry(int elem, double xi, double eta) const {
    if (xi < -1e-14 || eta < -1e-14 || xi + eta > 1.0 + 1e-14)
      throw std::invalid_argument("reference point outside the reference triangle");
    return sample(elem, st->basis.eval(xi, eta));
  }
  Mat3 discrete_weingarten(int elem, double xi, double eta) const { return element_geometry(elem, xi, eta).H; }
  // exact normal at the closest point
  Vec3 improved_normal(const Vec3& x) const { return surface.normal(x, t); }

  std::array<Vec3, 3> vertex_positions(int elem) const {
    const int* en = st->geo.nodes_of(elem);
    return {pos[en[0]], pos[en[1]], pos[en[2]]};
  }
  double h_max() const {
    double h = 0.0;
    for (int e = 0; e < num_elements(); ++e) {
      auto v = vertex_positions(e);
      h = std::max({h, (v[0] - v[1]).norm(), (v[1] - v[2]).norm(), (v[2] - v[0]).norm()});
    }
    return h;
  }
  // min inscribed radius of the vertex triangles over h_max
  double quasi_uniformity() const {
    double r = 1e300;
    for (int e = 0; e < num_elements(); ++e) {
      auto v = vertex_positions(e);
      double area = 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm();
      double per = (v[0] - v[1]).norm() + (v[1] - v[2]).norm() + (v[2] - v[0]).norm();
      r = std::min(r, 2.0 * area / per);
    }
    return r / h_max();
  }
  double max_level_set_residual() const {
    double m = 0.0;
    for (auto& x : pos) m = std::max(m, std::abs(surface.level_set(x, t)));
    return m;
  }
  double area(int quad_degree = -1) const {
    QuadratureRule q = quadrature(quad_degree < 0 ? 2 * kg + 2 : quad_degree);
    std::vector<BasisSample> bs;
    for (auto& p : q.points) bs.push_back(st->basis.eval(p[0], p[1]));
    double a = 0.0;
    for (int e = 0; e < num_elements(); ++e)
      for (int i = 0; i < q.size(); ++i) a += q.weights[i] * sample(e, bs[i]).meas;
    return a;
  }

  // snapshot at time t following the exact normal flow
  SurfaceMesh evolve(double tn) const {
    if (tn < -1e-14 || tn > t_max + 1e-12)
      throw std::out_of_range("evolve: t=" + std::to_string(tn) + " outside [0," + std::to_string(t_max) + "]");
    SurfaceMesh m = *this;
    m.t = tn;
    for (size_t i = 0; i < pos.size(); ++i) {
      m.pos[i] = surface.node_position(st->nodes0[i], tn);
      m.vel[i] = surface.material_velocity(m.pos[i], tn);
    }
    return m;
  }
  // same, by RK4 integration of the node ODE from this snapshot
  SurfaceMesh evolve_rk4(double tn, double dt_ode) const {
    if (tn < -1e-14 || tn > t_max + 1e-12) throw std::out_of_range("evolve_rk4: time outside [0,T]");
    SurfaceMesh m = *this;
    m.t = tn;
    for (size_t i = 0; i < pos.size(); ++i) {
      m.pos[i] = integrate_node_rk4(surface, pos[i], t, tn, dt_ode);
      m.vel[i] = surface.material_velocity(m.pos[i], tn);
    }
    return m;
  }

  // VTU with one Lagrange cell per element; point fields sampled at geometric nodes
  void write_vtu(const std::string& path,
                 const std::vector<std::pair<std::string, std::vector<Vec3>>>& vec_fields = {},
                 const std::vector<std::pair<std::string, std::vector<double>>>& scal_fields = {}) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f.precision(16);
    const int np = num_geo_nodes(), ne = num_elements(), nl = st->geo.nloc;
    int vtk_type = kg == 1 ? 5 : (kg == 2 ? 22 : 69);
    f << "<?xml version=\"1.0\"?>\n<VTKFile type=\"UnstructuredGrid\" version=\"1.0\" byte_order=\"LittleEndian\">\n"
      << "<UnstructuredGrid>\n<Piece NumberOfPoints=\"" << np << "\" NumberOfCells=\"" << ne << "\">\n";
    f << "<Points>\n<DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n";
    for (auto& x : pos) f << x[0] << " " << x[1] << " " << x[2] << "\n";
    f << "</DataArray>\n</Points>\n<Cells>\n<DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n";
    for (int e = 0; e < ne; ++e) {
      const int* en = st->geo.nodes_of(e);
      for (int a = 0; a < nl; ++a) f << en[a] << (a + 1 < nl ? " " : "\n");
    }
    f << "</DataArray>\n<DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n";
    for (int e = 0; e < ne; ++e) f << (e + 1) * nl << "\n";
    f << "</DataArray>\n<DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n";
    for (int e = 0; e < ne; ++e) f << vtk_type << "\n";
    f << "</DataArray>\n</Cells>\n<PointData>\n";
    for (auto& [name, vals] : vec_fields) {
      f << "<DataArray type=\"Float64\" Name=\"" << name << "\" NumberOfComponents=\"3\" format=\"ascii\">\n";
      for (auto& v : vals) f << v[0] << " " << v[1] << " " << v[2] << "\n";
      f << "</DataArray>\n";
    }
    for (auto& [name, vals] : scal_fields) {
      f << "<DataArray type=\"Float64\" Name=\"" << name << "\" format=\"ascii\">\n";
      for (double v : vals) f << v << "\n";
      f << "</DataArray>\n";
    }
    f << "</PointData>\n</Piece>\n</UnstructuredGrid>\n</VTKFile>\n";
  }
};

// Icosphere of the given level with degree-kg nodes projected onto Γ(0).
inline SurfaceMesh build_initial_mesh(const AnalyticSurface& s, int level, int kg, double t_max = -1.0) {
  if (kg < 1 || kg > 3) throw std::invalid_argument("unsupported geometry order k_g=" + std::to_string(kg));
  auto topo = std::make_shared<Topology>(icosphere(level));
  auto st = std::make_shared<MeshStatic>(MeshStatic{topo, NodeLayout(*topo, kg), LagrangeBasis(kg), {}});
  st->nodes0.resize(st->geo.num_nodes);
  for (int i = 0; i < st->geo.num_nodes; ++i) st->nodes0[i] = s.closest_point(st->geo.flat_points[i], 0.0);
  SurfaceMesh m;
  m.surface = s;
  m.level = level;
  m.kg = kg;
  m.t_max = t_max < 0 ? s.final_time() : t_max;
  m.st = st;
  m.pos = st->nodes0;
  m.vel.resize(m.pos.size());
  for (size_t i = 0; i < m.pos.size(); ++i) m.vel[i] = s.material_velocity(m.pos[i], 0.0);
  return m;
}

}  // namespace surfns
