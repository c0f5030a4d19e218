#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "safebandit/errors.hpp"

namespace safebandit::lp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Result {
  Status status = Status::kInfeasible;
  VectorXd x;
  double value = -std::numeric_limits<double>::infinity();
};

struct Options {
  double pivot_tol = 1e-11;
  double feas_tol = 1e-9;
  int max_iterations = 50000;
};

namespace detail {

/// Dense tableau: rows 0..m-1 are constraints, the last column is the rhs.
class Tableau {
 public:
  Tableau(const MatrixXd& A, const VectorXd& b, const Options& opt)
      : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())), opt_(opt) {
    for (int i = 0; i < m_; ++i)
      if (b(i) < 0) ++n_art_;
    cols_ = n_ + m_ + n_art_;
    t_ = MatrixXd::Zero(m_, cols_ + 1);
    basis_.resize(static_cast<std::size_t>(m_));
    int art = 0;
    for (int i = 0; i < m_; ++i) {
      const double sign = b(i) < 0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign * A.row(i);
      t_(i, n_ + i) = sign;
      t_(i, cols_) = sign * b(i);
      if (b(i) < 0) {
        const int col = n_ + m_ + art++;
        t_(i, col) = 1.0;
        basis_[static_cast<std::size_t>(i)] = col;
      } else {
        basis_[static_cast<std::size_t>(i)] = n_ + i;
      }
    }
  }

  bool needs_phase_one() const { return n_art_ > 0; }

  /// Phase one: maximise minus the sum of artificials. Returns false if infeasible.
  bool phase_one() {
    VectorXd cost = VectorXd::Zero(cols_);
    cost.tail(n_art_).setConstant(-1.0);
    allowed_ = cols_;
    run(cost);
    double infeasibility = 0.0;
    for (int i = 0; i < m_; ++i)
      if (is_artificial(basis_[static_cast<std::size_t>(i)])) infeasibility += t_(i, cols_);
    if (infeasibility > opt_.feas_tol * (1.0 + t_.col(cols_).cwiseAbs().maxCoeff())) return false;

    // Drive zero-valued artificials out of the basis or drop redundant rows.
    for (int i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)])) continue;
      int enter = -1;
      for (int j = 0; j < n_ + m_; ++j)
        if (std::abs(t_(i, j)) > opt_.pivot_tol) {
          enter = j;
          break;
        }
      if (enter >= 0) {
        pivot(i, enter);
      } else {
        remove_row(i);
        --i;
      }
    }
    return true;
  }

  /// Phase two on the structural + slack columns. Returns false if unbounded.
  bool phase_two(const VectorXd& c) {
    VectorXd cost = VectorXd::Zero(cols_);
    cost.head(n_) = c;
    allowed_ = n_ + m_;
    return run(cost);
  }

  VectorXd solution() const {
    VectorXd x = VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i) {
      const int col = basis_[static_cast<std::size_t>(i)];
      if (col < n_) x(col) = t_(i, cols_);
    }
    return x;
  }

 private:
  bool is_artificial(int col) const { return col >= n_ + m_; }

  void remove_row(int row) {
    const int last = m_ - 1;
    if (row != last) {
      t_.row(row) = t_.row(last);
      basis_[static_cast<std::size_t>(row)] = basis_[static_cast<std::size_t>(last)];
    }
    t_.conservativeResize(last, Eigen::NoChange);
    basis_.pop_back();
    --m_;
  }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  /// Bland's rule: lowest-index improving column, ties in the ratio test go
  /// to the lowest-index basic variable.
  bool run(const VectorXd& cost) {
    for (int iter = 0; iter < opt_.max_iterations; ++iter) {
      int enter = -1;
      for (int j = 0; j < allowed_ && enter < 0; ++j) {
        double reduced = cost(j);
        for (int i = 0; i < m_; ++i) reduced -= cost(basis_[static_cast<std::size_t>(i)]) * t_(i, j);
        if (reduced > opt_.pivot_tol) enter = j;
      }
      if (enter < 0) return true;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        const double coef = t_(i, enter);
        if (coef <= opt_.pivot_tol) continue;
        const double ratio = t_(i, cols_) / coef;
        if (leave < 0 || ratio < best_ratio - 1e-14) {
          best_ratio = ratio;
          leave = i;
        } else if (ratio <= best_ratio + 1e-14 &&
                   basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]) {
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw SolverError("simplex: iteration budget of " + std::to_string(opt_.max_iterations) + " exhausted");
  }

  int m_;
  int n_;
  int n_art_ = 0;
  int cols_ = 0;
  int allowed_ = 0;
  Options opt_;
  MatrixXd t_;
  std::vector<int> basis_;
};

}  // namespace detail

/// maximize cᵀx subject to A x ≤ b, x ≥ 0 (dense two-phase simplex).
inline Result maximize_nonneg(const VectorXd& c, const MatrixXd& A, const VectorXd& b, const Options& opt = {}) {
  detail::Tableau tab(A, b, opt);
  Result res;
  if (tab.needs_phase_one() && !tab.phase_one()) {
    res.status = Status::kInfeasible;
    return res;
  }
  if (!tab.phase_two(c)) {
    res.status = Status::kUnbounded;
    res.value = std::numeric_limits<double>::infinity();
    return res;
  }
  res.status = Status::kOptimal;
  res.x = tab.solution();
  res.value = c.dot(res.x);
  return res;
}

/// maximize cᵀx subject to A x ≤ b with x free (split as x⁺ − x⁻).
inline Result maximize_free(const VectorXd& c, const MatrixXd& A, const VectorXd& b, const Options& opt = {}) {
  const Eigen::Index n = A.cols();
  MatrixXd split(A.rows(), 2 * n);
  split << A, -A;
  VectorXd c2(2 * n);
  c2 << c, -c;
  Result inner = maximize_nonneg(c2, split, b, opt);
  Result res;
  res.status = inner.status;
  res.value = inner.value;
  if (inner.status == Status::kOptimal) {
    res.x = inner.x.head(n) - inner.x.tail(n);
    res.value = c.dot(res.x);
  }
  return res;
}

}  // namespace safebandit::lp
