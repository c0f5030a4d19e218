#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "safebandit/errors.hpp"

namespace safebandit::linalg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SymmetricEigen {
  VectorXd values;   // ascending
  MatrixXd vectors;  // column k pairs with values(k)
};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Only the lower triangle
/// is trusted; the upper one is mirrored before rotating.
inline SymmetricEigen jacobi_eigen(const MatrixXd& sym, int max_sweeps = 100) {
  const Eigen::Index n = sym.rows();
  MatrixXd a = sym.selfadjointView<Eigen::Lower>();
  MatrixXd v = MatrixXd::Identity(n, n);

  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= std::numeric_limits<double>::min()) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == max_sweeps) throw SolverError("jacobi_eigen: no convergence");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  SymmetricEigen out{VectorXd(n), MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

/// Singular values, ascending (two-sided Jacobi SVD). Rank-deficient inputs
/// give a smallest value near machine precision times the norm.
inline VectorXd singular_values(const MatrixXd& m) {
  const VectorXd desc = Eigen::JacobiSVD<MatrixXd>(m).singularValues();
  return desc.reverse();
}

inline double spectral_norm(const MatrixXd& m) { return singular_values(m).maxCoeff(); }

/// M^{-1/2} for symmetric positive definite M.
inline MatrixXd inverse_sqrt(const MatrixXd& spd) {
  const SymmetricEigen e = jacobi_eigen(spd);
  return e.vectors * e.values.cwiseSqrt().cwiseInverse().asDiagonal() * e.vectors.transpose();
}

/// In-place update of a lower Cholesky factor so that L Lᵀ becomes L Lᵀ + x xᵀ.
inline void cholesky_rank1_update(MatrixXd& lower, VectorXd x) {
  const Eigen::Index n = lower.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lkk = lower(k, k);
    const double r = std::hypot(lkk, x(k));
    const double c = r / lkk;
    const double s = x(k) / lkk;
    lower(k, k) = r;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      lower(i, k) = (lower(i, k) + s * x(i)) / c;
      x(i) = c * x(i) - s * lower(i, k);
    }
  }
}

/// n choose k, saturating at UINT64_MAX.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    if (result > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
    result = result * num / i;
  }
  return result;
}

/// Calls fn(indices) for every k-subset of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  if (k > n || k < 0) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(static_cast<const std::vector<int>&>(idx));
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline MatrixXd select_rows(const MatrixXd& m, const std::vector<int>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

inline VectorXd select_entries(const VectorXd& v, const std::vector<int>& rows) {
  VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

}  // namespace safebandit::linalg
