#pragma once
// Quadrature on the reference triangle {ξ,η ≥ 0, ξ+η ≤ 1} (area 1/2).
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace surfns {

struct QuadratureRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
  int degree = 0;
  int size() const { return static_cast<int>(points.size()); }
};

// Gauss–Legendre nodes and weights on [0,1] via Newton iteration on P_n.
inline void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
    }
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

constexpr int kMaxQuadratureDegree = 30;

// Rule exact for polynomials of total degree ≤ degree.
inline QuadratureRule quadrature(int degree) {
  if (degree < 0 || degree > kMaxQuadratureDegree)
    throw std::invalid_argument("quadrature: degree " + std::to_string(degree) + " outside [0," +
                                std::to_string(kMaxQuadratureDegree) + "]");
  QuadratureRule q;
  q.degree = degree;
  if (degree <= 1) {
    q.points = {Eigen::Vector2d(1.0 / 3.0, 1.0 / 3.0)};
    q.weights = {0.5};
    return q;
  }
  if (degree == 2) {
    q.points = {Eigen::Vector2d(1.0 / 6.0, 1.0 / 6.0), Eigen::Vector2d(2.0 / 3.0, 1.0 / 6.0),
                Eigen::Vector2d(1.0 / 6.0, 2.0 / 3.0)};
    q.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
    return q;
  }
  // collapsed coordinates ξ = a, η = b(1-a), Jacobian (1-a)
  int na = (degree + 2 + 1) / 2;
  int nb = (degree + 1 + 1) / 2;
  std::vector<double> xa, wa, xb, wb;
  gauss_legendre01(na, xa, wa);
  gauss_legendre01(nb, xb, wb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      q.points.emplace_back(xa[i], xb[j] * (1.0 - xa[i]));
      q.weights.push_back(wa[i] * wb[j] * (1.0 - xa[i]));
    }
  return q;
}

}  // namespace surfns
