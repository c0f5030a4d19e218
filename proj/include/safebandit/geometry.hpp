#pragma once

// Polytopes {x : Ax <= b} and their erosion geometry: shrunk sets, maximum
// shrinkage, sharpness and the condition constant K.
//
// Default tolerances: feasibility slack 1e-8, rank cutoff 1e-10 on the
// smallest singular value, vertex dedup radius 1e-7, Dykstra step tolerance
// 1e-9 with 1e5 sweeps, subset budget 2e6. All live in GeometryOptions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "safebandit/errors.hpp"
#include "safebandit/linalg.hpp"
#include "safebandit/simplex.hpp"

namespace safebandit::geometry {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GeometryOptions {
  double feas_tol = 1e-8;
  double rank_tol = 1e-10;
  double dup_tol = 1e-7;
  double projection_tol = 1e-9;
  long projection_max_sweeps = 100000;
  std::uint64_t subset_budget = 2'000'000;
  int max_dimension = 12;
};

/// Which p-norm the shrinking ball is measured in.
enum class Norm { kL1, kL2, kLinf };

inline const char* norm_name(Norm norm) {
  switch (norm) {
    case Norm::kL1: return "1";
    case Norm::kL2: return "2";
    case Norm::kLinf: return "inf";
  }
  return "?";
}

inline Norm parse_norm(const std::string& s) {
  if (s == "1" || s == "l1") return Norm::kL1;
  if (s == "2" || s == "l2") return Norm::kL2;
  if (s == "inf" || s == "linf" || s == "oo") return Norm::kLinf;
  throw std::invalid_argument("unknown norm '" + s + "' (expected 1, 2 or inf)");
}

/// Dual exponent: 1 <-> inf, 2 <-> 2.
inline Norm dual(Norm norm) {
  switch (norm) {
    case Norm::kL1: return Norm::kLinf;
    case Norm::kL2: return Norm::kL2;
    case Norm::kLinf: return Norm::kL1;
  }
  return Norm::kL2;
}

inline double norm_of(const VectorXd& v, Norm norm) {
  switch (norm) {
    case Norm::kL1: return v.lpNorm<1>();
    case Norm::kL2: return v.norm();
    case Norm::kLinf: return v.lpNorm<Eigen::Infinity>();
  }
  return v.norm();
}

inline double dual_norm(const VectorXd& v, Norm norm) { return norm_of(v, dual(norm)); }

/// max over the unit sphere of `norm` of the Euclidean length.
inline double norm_constant(Norm norm, Eigen::Index dim) {
  return norm == Norm::kLinf ? std::sqrt(static_cast<double>(dim)) : 1.0;
}

class Polytope {
 public:
  Polytope() = default;

  Polytope(MatrixXd A, VectorXd b) : A_(std::move(A)), b_(std::move(b)) {
    if (A_.rows() != b_.size())
      throw std::invalid_argument("Polytope: A has " + std::to_string(A_.rows()) + " rows but b has " +
                                  std::to_string(b_.size()) + " entries");
    if (A_.cols() == 0) throw std::invalid_argument("Polytope: zero dimension");
    if (!A_.allFinite() || !b_.allFinite()) throw std::invalid_argument("Polytope: non-finite entries");
    for (Eigen::Index j = 0; j < A_.rows(); ++j)
      if (!(A_.row(j).norm() > 0.0)) throw std::invalid_argument("Polytope: row " + std::to_string(j) + " is zero");
  }

  const MatrixXd& A() const { return A_; }
  const VectorXd& b() const { return b_; }
  Eigen::Index rows() const { return A_.rows(); }
  Eigen::Index dim() const { return A_.cols(); }

  /// Largest constraint violation max_j (a_j·x − b_j), negative inside.
  double max_violation(const VectorXd& x) const { return (A_ * x - b_).maxCoeff(); }

  bool contains(const VectorXd& x, double tol = 1e-8) const { return max_violation(x) <= tol; }

  friend bool operator==(const Polytope& l, const Polytope& r) { return l.A_ == r.A_ && l.b_ == r.b_; }

 private:
  MatrixXd A_;
  VectorXd b_;
};

struct Vertex {
  VectorXd point;
  std::vector<int> active_rows;
};

/// α_j = ‖a_j‖⋆, the per-row offset of a unit shrink.
inline VectorXd shrink_offsets(const Polytope& poly, Norm norm) {
  VectorXd alpha(poly.rows());
  for (Eigen::Index j = 0; j < poly.rows(); ++j) alpha(j) = dual_norm(poly.A().row(j).transpose(), norm);
  return alpha;
}

/// The set of x whose `norm`-ball of radius delta lies inside poly.
inline Polytope shrink(const Polytope& poly, double delta, Norm norm) {
  if (!(delta >= 0.0)) throw std::invalid_argument("shrink: delta must be nonnegative");
  return Polytope(poly.A(), poly.b() - delta * shrink_offsets(poly, norm));
}

inline bool is_empty(const Polytope& poly) {
  const lp::Result r = lp::maximize_free(VectorXd::Zero(poly.dim()), poly.A(), poly.b());
  return r.status == lp::Status::kInfeasible;
}

/// Bounded iff every coordinate is bounded above and below. Empty sets count as bounded.
inline bool is_bounded(const Polytope& poly) {
  for (Eigen::Index k = 0; k < poly.dim(); ++k) {
    for (double sign : {1.0, -1.0}) {
      VectorXd c = VectorXd::Zero(poly.dim());
      c(k) = sign;
      const lp::Result r = lp::maximize_free(c, poly.A(), poly.b());
      if (r.status == lp::Status::kUnbounded) return false;
      if (r.status == lp::Status::kInfeasible) return true;
    }
  }
  return true;
}

struct Shrinkage {
  double value = 0.0;
  VectorXd center;  // a point of the maximally shrunk set
};

/// Solves max Δ s.t. A x + Δ α ≤ b, Δ ≥ 0 over (x, Δ).
inline Shrinkage max_shrinkage_with_center(const Polytope& poly, Norm norm) {
  const Eigen::Index m = poly.dim();
  const Eigen::Index p = poly.rows();
  const VectorXd alpha = shrink_offsets(poly, norm);

  MatrixXd A(p + 1, m + 1);
  A.topLeftCorner(p, m) = poly.A();
  A.topRightCorner(p, 1) = alpha;
  A.row(p).setZero();
  A(p, m) = -1.0;
  VectorXd b(p + 1);
  b << poly.b(), 0.0;
  VectorXd c = VectorXd::Zero(m + 1);
  c(m) = 1.0;

  const lp::Result r = lp::maximize_free(c, A, b);
  if (r.status == lp::Status::kInfeasible)
    throw GeometryError(GeometryError::Kind::kEmptySet, "max_shrinkage: polytope is empty");
  if (r.status == lp::Status::kUnbounded || !is_bounded(poly))
    throw GeometryError(GeometryError::Kind::kUnbounded, "max_shrinkage: polytope is unbounded");
  return {std::max(0.0, r.x(m)), r.x.head(m)};
}

inline double max_shrinkage(const Polytope& poly, Norm norm) { return max_shrinkage_with_center(poly, norm).value; }

namespace detail {

inline void check_enumeration_budget(const Polytope& poly, const GeometryOptions& opt, const char* who) {
  const auto m = static_cast<std::uint64_t>(poly.dim());
  const auto p = static_cast<std::uint64_t>(poly.rows());
  if (poly.dim() > opt.max_dimension)
    throw GeometryError(GeometryError::Kind::kBudget, std::string(who) + ": dimension " + std::to_string(m) +
                                                          " exceeds limit " + std::to_string(opt.max_dimension));
  const std::uint64_t subsets = linalg::binomial(p, m);
  if (subsets > opt.subset_budget)
    throw GeometryError(GeometryError::Kind::kBudget, std::string(who) + ": " + std::to_string(subsets) +
                                                          " row subsets exceed budget " +
                                                          std::to_string(opt.subset_budget));
}

}  // namespace detail

/// Vertices by brute force over all m-subsets of rows.
inline std::vector<Vertex> vertices(const Polytope& poly, const GeometryOptions& opt = {}) {
  detail::check_enumeration_budget(poly, opt, "vertices");
  const int m = static_cast<int>(poly.dim());
  const int p = static_cast<int>(poly.rows());
  std::vector<Vertex> out;

  linalg::for_each_subset(p, m, [&](const std::vector<int>& rows) {
    const MatrixXd sub = linalg::select_rows(poly.A(), rows);
    const Eigen::FullPivLU<MatrixXd> lu(sub);
    if (!lu.isInvertible()) return;
    if (linalg::singular_values(sub)(0) < opt.rank_tol) return;
    const VectorXd v = lu.solve(linalg::select_entries(poly.b(), rows));
    const double scale = 1.0 + poly.b().cwiseAbs().maxCoeff();
    if (poly.max_violation(v) > opt.feas_tol * scale) return;
    for (const Vertex& known : out)
      if ((known.point - v).norm() <= opt.dup_tol * (1.0 + v.norm())) return;
    out.push_back({v, rows});
  });
  return out;
}

/// Euclidean projection onto {x : Ax ≤ b} by Dykstra's alternating projections.
inline VectorXd project(const VectorXd& point, const Polytope& poly, double tol, long max_sweeps = 100000,
                        double feas_tol = 1e-8) {
  if (poly.max_violation(point) <= 0.0) return point;

  const Eigen::Index p = poly.rows();
  const VectorXd row_norm_sq = poly.A().rowwise().squaredNorm();
  MatrixXd increments = MatrixXd::Zero(poly.dim(), p);
  VectorXd x = point;
  double moved = std::numeric_limits<double>::infinity();
  const double scale = 1.0 + poly.b().cwiseAbs().maxCoeff();

  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    const VectorXd start = x;
    for (Eigen::Index j = 0; j < p; ++j) {
      const VectorXd y = x + increments.col(j);
      const double excess = poly.A().row(j).dot(y) - poly.b()(j);
      x = excess > 0.0 ? VectorXd(y - (excess / row_norm_sq(j)) * poly.A().row(j).transpose()) : y;
      increments.col(j) = y - x;
    }
    moved = (x - start).norm();
    if (moved < tol && poly.max_violation(x) <= feas_tol * scale) return x;
  }
  throw ProjectionError("project: Dykstra did not converge in " + std::to_string(max_sweeps) + " sweeps", x,
                        moved);
}

inline VectorXd project(const VectorXd& point, const Polytope& poly, const GeometryOptions& opt = {}) {
  return project(point, poly, opt.projection_tol, opt.projection_max_sweeps, opt.feas_tol);
}

/// Exact projection by KKT enumeration over row subsets of size at most m.
/// Handles shrunk sets with empty interior, where Dykstra stalls.
inline VectorXd project_active_set(const VectorXd& point, const Polytope& poly, const GeometryOptions& opt = {}) {
  if (poly.max_violation(point) <= 0.0) return point;
  detail::check_enumeration_budget(poly, opt, "project_active_set");
  const double scale = 1.0 + poly.b().cwiseAbs().maxCoeff();
  const int p = static_cast<int>(poly.rows());
  VectorXd best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= std::min<int>(p, static_cast<int>(poly.dim())); ++k) {
    linalg::for_each_subset(p, k, [&](const std::vector<int>& rows) {
      const MatrixXd As = linalg::select_rows(poly.A(), rows);
      const Eigen::LDLT<MatrixXd> gram(As * As.transpose());
      if (gram.info() != Eigen::Success || linalg::singular_values(As)(0) < opt.rank_tol) return;
      const VectorXd lambda = gram.solve(As * point - linalg::select_entries(poly.b(), rows));
      if (lambda.minCoeff() < -opt.feas_tol) return;
      const VectorXd x = point - As.transpose() * lambda;
      if (poly.max_violation(x) > opt.feas_tol * scale) return;
      const double dist = (x - point).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = x;
      }
    });
  }
  if (best.size() == 0) throw ProjectionError("project_active_set: no KKT point found", point, INFINITY);
  return best;
}

/// Worst-case distance from a point of poly to its shrunk set, evaluated at
/// the vertices (the distance to a convex set is convex).
inline double sharpness(const Polytope& poly, double delta, Norm norm, const GeometryOptions& opt = {}) {
  if (!(delta >= 0.0)) throw std::invalid_argument("sharpness: delta must be nonnegative");
  if (delta == 0.0) return 0.0;
  const double h = max_shrinkage(poly, norm);
  if (delta > h * (1.0 + 1e-12))
    throw GeometryError(GeometryError::Kind::kDomain, "sharpness: delta " + std::to_string(delta) +
                                                          " exceeds maximum shrinkage " + std::to_string(h));
  const Polytope shrunk = shrink(poly, std::min(delta, h), norm);
  double worst = 0.0;
  for (const Vertex& v : vertices(poly, opt)) {
    VectorXd target;
    try {
      target = project(v.point, shrunk, opt);
    } catch (const ProjectionError&) {
      target = project_active_set(v.point, shrunk, opt);
    }
    worst = std::max(worst, (v.point - target).norm());
  }
  return worst;
}

/// K = max condition number over linearly independent m-subsets of rows.
inline double condition_constant(const Polytope& poly, const GeometryOptions& opt = {}) {
  detail::check_enumeration_budget(poly, opt, "condition_constant");
  const int m = static_cast<int>(poly.dim());
  double worst = -1.0;
  linalg::for_each_subset(static_cast<int>(poly.rows()), m, [&](const std::vector<int>& rows) {
    const VectorXd sv = linalg::singular_values(linalg::select_rows(poly.A(), rows));
    if (sv(0) < opt.rank_tol) return;
    worst = std::max(worst, sv(sv.size() - 1) / sv(0));
  });
  if (worst < 0.0)
    throw GeometryError(GeometryError::Kind::kDegenerate, "condition_constant: no linearly independent row subset");
  return worst;
}

inline double diameter(const Polytope& poly, const GeometryOptions& opt = {}) {
  const std::vector<Vertex> vs = vertices(poly, opt);
  double best = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) best = std::max(best, (vs[i].point - vs[j].point).norm());
  return best;
}

struct CurvePoint {
  double delta;
  double sharpness;
};

/// Sharpness sampled uniformly on [0, H] at n_points.
inline std::vector<CurvePoint> sharpness_curve(const Polytope& poly, Norm norm, int n_points,
                                               const GeometryOptions& opt = {}) {
  if (n_points < 1) throw std::invalid_argument("sharpness_curve: need at least one point");
  const double h = max_shrinkage(poly, norm);
  const std::vector<Vertex> vs = vertices(poly, opt);
  std::vector<CurvePoint> curve;
  curve.reserve(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double delta = n_points == 1 ? 0.0 : h * k / (n_points - 1);
    double worst = 0.0;
    if (delta > 0.0) {
      const Polytope shrunk = shrink(poly, delta, norm);
      for (const Vertex& v : vs) worst = std::max(worst, (v.point - project(v.point, shrunk, opt)).norm());
    }
    curve.push_back({delta, worst});
  }
  return curve;
}

}  // namespace safebandit::geometry
