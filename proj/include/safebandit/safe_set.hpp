#pragma once

// Closed-form membership in the conservative safe sets for a polytopic
// safety set E = {y : F y ≤ g}. Rows of Θ vary independently, so the worst
// case over a row-separable parameter set splits into per-entry support
// functions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "safebandit/errors.hpp"
#include "safebandit/estimation.hpp"
#include "safebandit/geometry.hpp"

namespace safebandit::safe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// E = {y : F y ≤ g}; F is the polytope's A and g its b.
using SafetyPolytope = geometry::Polytope;

/// Axis-aligned action set.
struct ActionBox {
  VectorXd lower;
  VectorXd upper;

  ActionBox() = default;
  ActionBox(VectorXd lo, VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.size() == 0) throw std::invalid_argument("ActionBox: size mismatch");
    if (!lower.allFinite() || !upper.allFinite()) throw std::invalid_argument("ActionBox: non-finite bound");
    if ((upper - lower).minCoeff() < 0.0) throw std::invalid_argument("ActionBox: lower exceeds upper");
  }

  static ActionBox symmetric(Eigen::Index d, double half_width) {
    return {VectorXd::Constant(d, -half_width), VectorXd::Constant(d, half_width)};
  }

  Eigen::Index dim() const { return lower.size(); }

  /// L = max over corners of ‖x‖₂.
  double radius() const { return lower.cwiseAbs().cwiseMax(upper.cwiseAbs()).norm(); }

  bool contains(const VectorXd& x, double tol = 0.0) const {
    return (x - lower).minCoeff() >= -tol && (upper - x).minCoeff() >= -tol;
  }

  VectorXd clamp(const VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

/// ‖F_j‖₁ per safety row.
inline VectorXd row_l1(const SafetyPolytope& safety) { return safety.A().rowwise().lpNorm<1>(); }

/// min_j (g_j − S ‖x‖₂ ‖F_j‖₁): slack of the worst row over the S-ball parameter set.
inline double g0_margin(const VectorXd& x, const SafetyPolytope& safety, double row_bound) {
  return (safety.b() - row_bound * x.norm() * row_l1(safety)).minCoeff();
}

inline bool in_G0(const VectorXd& x, const SafetyPolytope& safety, double row_bound) {
  return g0_margin(x, safety, row_bound) >= 0.0;
}

/// Radius ρ such that the parameter-robust set is the Euclidean ball B(ρ)
/// (before intersecting with A); negative when g has a negative entry.
inline double g0_ball_radius(const SafetyPolytope& safety, double row_bound) {
  const VectorXd l1 = row_l1(safety);
  double rho = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < safety.rows(); ++j) {
    if (safety.b()(j) < 0.0) return -1.0;
    if (row_bound * l1(j) > 0.0) rho = std::min(rho, safety.b()(j) / (row_bound * l1(j)));
  }
  return rho;
}

/// Evaluates the C_t-robust safety slack min_j (g_j − F_j Θ̂ x − √β_t ‖x‖_{V⁻¹} ‖F_j‖₁)
/// one point at a time without allocating.
class MarginEvaluator {
 public:
  MarginEvaluator(const estimation::ConfidenceState& conf, const SafetyPolytope& safety)
      : d_(conf.params().d), q_(safety.rows()) {
    const MatrixXd linv =
        conf.gram().chol().triangularView<Eigen::Lower>().solve(MatrixXd::Identity(d_, d_));
    const MatrixXd ft = safety.A() * conf.theta_hat();
    const VectorXd spread = conf.beta_sqrt() * row_l1(safety);
    linv_.resize(static_cast<std::size_t>(d_ * d_));
    ft_.resize(static_cast<std::size_t>(q_ * d_));
    for (Eigen::Index r = 0; r < d_; ++r)
      for (Eigen::Index c = 0; c < d_; ++c) linv_[static_cast<std::size_t>(r * d_ + c)] = linv(r, c);
    for (Eigen::Index j = 0; j < q_; ++j)
      for (Eigen::Index c = 0; c < d_; ++c) ft_[static_cast<std::size_t>(j * d_ + c)] = ft(j, c);
    g_.assign(safety.b().data(), safety.b().data() + q_);
    spread_.assign(spread.data(), spread.data() + q_);
  }

  Eigen::Index dim() const { return d_; }

  /// ‖x‖_{V⁻¹}.
  double weighted_norm(const double* x) const {
    double sq = 0.0;
    for (Eigen::Index r = 0; r < d_; ++r) {
      double acc = 0.0;
      const double* row = &linv_[static_cast<std::size_t>(r * d_)];
      for (Eigen::Index c = 0; c <= r; ++c) acc += row[c] * x[c];
      sq += acc * acc;
    }
    return std::sqrt(sq);
  }

  double margin(const double* x, double weighted) const {
    double worst = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < q_; ++j) {
      double lhs = 0.0;
      const double* row = &ft_[static_cast<std::size_t>(j * d_)];
      for (Eigen::Index c = 0; c < d_; ++c) lhs += row[c] * x[c];
      worst = std::min(worst, g_[static_cast<std::size_t>(j)] - (lhs + spread_[static_cast<std::size_t>(j)] * weighted));
    }
    return worst;
  }

  double margin(const double* x) const { return margin(x, weighted_norm(x)); }

  /// margin(x, weighted) >= 0, stopping at the first violated row.
  bool passes(const double* x, double weighted) const {
    for (Eigen::Index j = 0; j < q_; ++j) {
      double lhs = 0.0;
      const double* row = &ft_[static_cast<std::size_t>(j * d_)];
      for (Eigen::Index c = 0; c < d_; ++c) lhs += row[c] * x[c];
      if (!(g_[static_cast<std::size_t>(j)] - (lhs + spread_[static_cast<std::size_t>(j)] * weighted) >= 0.0))
        return false;
    }
    return true;
  }

 private:
  Eigen::Index d_;
  Eigen::Index q_;
  std::vector<double> linv_;
  std::vector<double> ft_;
  std::vector<double> g_;
  std::vector<double> spread_;
};

/// Slack of the C_t-robust safety test for every column of xs.
inline VectorXd safety_margins(const MatrixXd& xs, const estimation::ConfidenceState& conf,
                               const SafetyPolytope& safety) {
  const MarginEvaluator eval(conf, safety);
  VectorXd out(xs.cols());
  for (Eigen::Index col = 0; col < xs.cols(); ++col) out(col) = eval.margin(xs.col(col).data());
  return out;
}

inline double safety_margin(const VectorXd& x, const estimation::ConfidenceState& conf,
                            const SafetyPolytope& safety) {
  return MarginEvaluator(conf, safety).margin(x.data());
}

inline bool in_Gt(const VectorXd& x, const estimation::ConfidenceState& conf, const SafetyPolytope& safety) {
  return safety_margin(x, conf, safety) >= 0.0;
}

struct InteriorWitness {
  VectorXd center;
  double radius = 0.0;  // the open ball center + B(radius) lies in G0
};

/// Searches a coarse grid over A for the center of the largest ball inside
/// G0 = A ∩ B(ρ). Throws ConfigError when no point has positive clearance.
inline InteriorWitness find_g0_witness(const SafetyPolytope& safety, double row_bound, const ActionBox& box,
                                       int points_per_axis = 11) {
  const double rho = g0_ball_radius(safety, row_bound);
  if (!(rho > 0.0)) throw ConfigError("initial safe set has empty interior: some safety offset g_j <= 0");
  const Eigen::Index d = box.dim();
  const int k = std::max(points_per_axis, 1);

  auto clearance = [&](const VectorXd& v) {
    const double to_faces = std::min((v - box.lower).minCoeff(), (box.upper - v).minCoeff());
    return std::min(rho - v.norm(), to_faces);
  };

  InteriorWitness best{VectorXd::Zero(d), -std::numeric_limits<double>::infinity()};
  if (box.contains(best.center)) best.radius = clearance(best.center);

  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    VectorXd v(d);
    for (Eigen::Index c = 0; c < d; ++c)
      v(c) = k == 1 ? 0.5 * (box.lower(c) + box.upper(c))
                    : box.lower(c) + (box.upper(c) - box.lower(c)) * idx[static_cast<std::size_t>(c)] / (k - 1);
    const double r = clearance(v);
    if (r > best.radius) best = {v, r};
    Eigen::Index c = 0;
    while (c < d && ++idx[static_cast<std::size_t>(c)] == k) idx[static_cast<std::size_t>(c++)] = 0;
    if (c == d) break;
  }
  if (!(best.radius > 0.0)) throw ConfigError("initial safe set has empty interior inside the action box");
  return best;
}

}  // namespace safebandit::safe
