#pragma once
// Scalar Lagrange bases of degree 1..3 on the reference triangle.
#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <vector>

namespace surfns {

struct BasisSample {
  Eigen::VectorXd value;
  Eigen::MatrixXd grad;  // n × 2
  Eigen::MatrixXd hess;  // n × 3: (ξξ, ξη, ηη)
};

// Local node order: 3 vertices, then interior edge nodes of edges (0,1), (1,2), (2,0)
// running from the first to the second vertex, then face-interior nodes.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int k = 1) : k_(k) {
    if (k < 1 || k > 3) throw std::invalid_argument("Lagrange degree must be 1, 2 or 3");
    const double h = 1.0 / k;
    nodes_ = {{0, 0}, {1, 0}, {0, 1}};
    for (int i = 1; i < k; ++i) nodes_.push_back({i * h, 0});
    for (int i = 1; i < k; ++i) nodes_.push_back({(k - i) * h, i * h});
    for (int i = 1; i < k; ++i) nodes_.push_back({0, (k - i) * h});
    for (int j = 1; j < k; ++j)
      for (int i = 1; i + j < k; ++i) nodes_.push_back({i * h, j * h});
    for (int a = 0; a <= k; ++a)
      for (int b = 0; a + b <= k; ++b) exps_.push_back({a, b});
    const int n = size();
    Eigen::MatrixXd V(n, n);
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m) V(i, m) = mono(m, nodes_[i][0], nodes_[i][1], 0, 0);
    // coefficients: column j holds the monomial expansion of basis j
    coef_ = V.fullPivLu().inverse();
  }

  int degree() const { return k_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int per_edge() const { return k_ - 1; }
  int per_face() const { return (k_ - 1) * (k_ - 2) / 2; }
  const std::vector<std::array<double, 2>>& nodes() const { return nodes_; }

  BasisSample eval(double x, double y) const {
    const int n = size();
    Eigen::VectorXd m(n), mx(n), my(n), mxx(n), mxy(n), myy(n);
    for (int i = 0; i < n; ++i) {
      m[i] = mono(i, x, y, 0, 0);
      mx[i] = mono(i, x, y, 1, 0);
      my[i] = mono(i, x, y, 0, 1);
      mxx[i] = mono(i, x, y, 2, 0);
      mxy[i] = mono(i, x, y, 1, 1);
      myy[i] = mono(i, x, y, 0, 2);
    }
    BasisSample s;
    s.value = coef_.transpose() * m;
    s.grad.resize(n, 2);
    s.grad.col(0) = coef_.transpose() * mx;
    s.grad.col(1) = coef_.transpose() * my;
    s.hess.resize(n, 3);
    s.hess.col(0) = coef_.transpose() * mxx;
    s.hess.col(1) = coef_.transpose() * mxy;
    s.hess.col(2) = coef_.transpose() * myy;
    return s;
  }

 private:
  static double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
  }
  static double falling(int a, int d) {
    double r = 1.0;
    for (int i = 0; i < d; ++i) r *= (a - i);
    return r;
  }
  // ∂^dx_x ∂^dy_y of monomial m
  double mono(int m, double x, double y, int dx, int dy) const {
    int a = exps_[m][0], b = exps_[m][1];
    if (dx > a || dy > b) return 0.0;
    return falling(a, dx) * falling(b, dy) * ipow(x, a - dx) * ipow(y, b - dy);
  }

  int k_;
  std::vector<std::array<double, 2>> nodes_;
  std::vector<std::array<int, 2>> exps_;
  Eigen::MatrixXd coef_;
};

}  // namespace surfns
