#pragma once

#include <cmath>
#include <random>

#include <Eigen/Core>

#include "safebandit/geometry.hpp"

namespace testing_support {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng) {
  const MatrixXd b = random_matrix(n, n, rng);
  return b * b.transpose() + 0.1 * MatrixXd::Identity(n, n);
}

inline VectorXd random_unit(Eigen::Index n, std::mt19937_64& rng) {
  VectorXd v = random_matrix(n, 1, rng).col(0);
  return v / v.norm();
}

inline safebandit::geometry::Polytope unit_square() {
  MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  return {A, VectorXd::Ones(4)};
}

inline safebandit::geometry::Polytope simplex_2d() {
  MatrixXd A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  VectorXd b(3);
  b << 0, 0, 1;
  return {A, b};
}

/// Random bounded polytope around the origin: unit normals, offsets in [0.5, 1.5],
/// every vertex within distance 10 (thin far-reaching slivers are redrawn).
inline safebandit::geometry::Polytope random_polytope(Eigen::Index m, int rows, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> off(0.5, 1.5);
  while (true) {
    MatrixXd A(rows, m);
    VectorXd b(rows);
    for (int j = 0; j < rows; ++j) {
      A.row(j) = random_unit(m, rng).transpose();
      b(j) = off(rng);
    }
    safebandit::geometry::Polytope p(A, b);
    if (!safebandit::geometry::is_bounded(p)) continue;
    bool compact = true;
    for (const auto& v : safebandit::geometry::vertices(p)) compact = compact && v.point.norm() <= 10.0;
    if (compact) return p;
  }
}

/// Exact distance from x to a 2-D polygon {Ax ≤ b} by enumerating active sets
/// of size 0, 1 and 2.
inline double polygon_distance(const VectorXd& x, const MatrixXd& A, const VectorXd& b) {
  auto feasible = [&](const VectorXd& y) { return (A * y - b).maxCoeff() <= 1e-9; };
  if (feasible(x)) return 0.0;
  double best = INFINITY;
  for (Eigen::Index j = 0; j < A.rows(); ++j) {
    const VectorXd a = A.row(j).transpose();
    const VectorXd y = x - ((a.dot(x) - b(j)) / a.squaredNorm()) * a;
    if (feasible(y)) best = std::min(best, (y - x).norm());
    for (Eigen::Index k = j + 1; k < A.rows(); ++k) {
      Eigen::Matrix2d M;
      M << A(j, 0), A(j, 1), A(k, 0), A(k, 1);
      const double det = M.determinant();
      if (std::abs(det) < 1e-12) continue;
      const Eigen::Vector2d z = M.inverse() * Eigen::Vector2d(b(j), b(k));
      if (feasible(z)) best = std::min(best, (z - x).norm());
    }
  }
  return best;
}

}  // namespace testing_support
