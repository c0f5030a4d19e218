#pragma once

// Row-wise regularized least squares with a shared Gram matrix and the
// self-normalized confidence radius for each row estimate.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "safebandit/linalg.hpp"

namespace safebandit::estimation {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ConfidenceParams {
  double noise_scale = 0.0;  // R, sub-Gaussian scale of each response coordinate
  double row_bound = 1.0;    // S ≥ ‖θ^i‖₂
  double action_bound = 1.0; // L ≥ ‖x‖₂
  double delta = 0.01;
  double nu = 1.0;
  int n = 1;
  int d = 1;
  double radius_scale = 1.0;            // multiplies √β_t; 1 reproduces the exact radius
  std::optional<double> beta_override;  // forces √β_t to a constant (oracle experiments)

  void validate() const {
    if (!(nu > 0.0)) throw std::invalid_argument("confidence: nu must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("confidence: delta must lie in (0,1)");
    if (n < 1 || d < 1) throw std::invalid_argument("confidence: dimensions must be positive");
    if (!(noise_scale >= 0.0) || !(row_bound >= 0.0) || !(action_bound > 0.0))
      throw std::invalid_argument("confidence: R, S must be nonnegative and L positive");
  }
};

/// √β_t = R √(d log((1 + t L²/ν)/(δ/n))) + √ν S.
inline double beta_sqrt(const ConfidenceParams& p, long t) {
  p.validate();
  if (t < 0) throw std::invalid_argument("beta_sqrt: negative round");
  if (p.beta_override) return *p.beta_override;
  const double log_term = std::log((1.0 + static_cast<double>(t) * p.action_bound * p.action_bound / p.nu) /
                                   (p.delta / static_cast<double>(p.n)));
  const double radius = p.noise_scale * std::sqrt(p.d * log_term) + std::sqrt(p.nu) * p.row_bound;
  return p.radius_scale * radius;
}

/// 2(d log((dν + T L²)/d) − d log ν): the elliptical-potential ceiling.
inline double elliptical_potential_bound(int d, double nu, long horizon, double action_bound) {
  const double dd = d;
  return 2.0 * (dd * std::log((dd * nu + static_cast<double>(horizon) * action_bound * action_bound) / dd) -
                dd * std::log(nu));
}

/// V = νI + Σ x xᵀ kept together with its lower Cholesky factor.
class GramState {
 public:
  GramState(int d, int n, double nu)
      : V_(nu * MatrixXd::Identity(d, d)),
        chol_(std::sqrt(nu) * MatrixXd::Identity(d, d)),
        cross_(MatrixXd::Zero(d, n)),
        nu_(nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("GramState: nu must be positive");
  }

  void absorb(const VectorXd& x, const VectorXd& y) {
    V_.noalias() += x * x.transpose();
    linalg::cholesky_rank1_update(chol_, x);
    cross_.noalias() += x * y.transpose();
    ++t_;
  }

  /// Replaces Σ x yᵀ so that the current estimate becomes `theta` (n×d).
  void set_cross_for(const MatrixXd& theta) { cross_ = V_ * theta.transpose(); }

  /// V⁻¹ rhs via two triangular solves.
  MatrixXd solve(const MatrixXd& rhs) const {
    const auto L = chol_.triangularView<Eigen::Lower>();
    return L.transpose().solve(L.solve(rhs));
  }

  const MatrixXd& V() const { return V_; }
  const MatrixXd& chol() const { return chol_; }
  const MatrixXd& cross() const { return cross_; }
  long t() const { return t_; }
  double nu() const { return nu_; }

 private:
  MatrixXd V_;
  MatrixXd chol_;
  MatrixXd cross_;
  long t_ = 0;
  double nu_;
};

/// Row ellipsoids {θ^i : ‖θ^i − θ̂^i‖_V ≤ √β_t} around the least-squares rows.
class ConfidenceState {
 public:
  explicit ConfidenceState(ConfidenceParams params)
      : params_((params.validate(), params)),
        gram_(params.d, params.n, params.nu),
        theta_hat_(MatrixXd::Zero(params.n, params.d)),
        beta_sqrt_(safebandit::estimation::beta_sqrt(params_, 0)) {}

  void update(const VectorXd& x, const VectorXd& y) {
    if (x.size() != params_.d || y.size() != params_.n)
      throw std::invalid_argument("ConfidenceState::update: dimension mismatch");
    if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("ConfidenceState::update: non-finite input");
    if (x.norm() > params_.action_bound * (1.0 + 1e-9))
      throw std::logic_error("ConfidenceState::update: ‖x‖ = " + std::to_string(x.norm()) + " exceeds L = " +
                             std::to_string(params_.action_bound));
    gram_.absorb(x, y);
    refresh();
  }

  /// Makes θ̂ equal to `theta`; later noiseless data keeps it there.
  void preload(const MatrixXd& theta) {
    gram_.set_cross_for(theta);
    refresh();
  }

  double weighted_norm(const VectorXd& x) const {
    return gram_.chol().triangularView<Eigen::Lower>().solve(x).norm();
  }

  /// ‖x‖_{V⁻¹} for every column of `xs`.
  VectorXd weighted_norms(const MatrixXd& xs) const {
    return gram_.chol().triangularView<Eigen::Lower>().solve(xs).colwise().norm().transpose();
  }

  /// ‖v‖_V for a parameter deviation.
  double deviation_norm(const VectorXd& v) const { return (gram_.chol().transpose() * v).norm(); }

  bool contains(const MatrixXd& theta) const {
    for (Eigen::Index i = 0; i < theta.rows(); ++i)
      if (deviation_norm((theta.row(i) - theta_hat_.row(i)).transpose()) > beta_sqrt_) return false;
    return true;
  }

  /// Per row: the 2d vertices θ̂^i ± radius V^{-1/2} e_k of the ℓ1 ball that
  /// contains the row ellipsoid; radius defaults to √(d β_t). Each entry is d×2d.
  std::vector<MatrixXd> l1_vertices(std::optional<double> radius = std::nullopt) const {
    const double rho = radius ? *radius : std::sqrt(static_cast<double>(params_.d)) * beta_sqrt_;
    const MatrixXd root = linalg::inverse_sqrt(gram_.V());
    std::vector<MatrixXd> out;
    out.reserve(static_cast<std::size_t>(params_.n));
    for (int i = 0; i < params_.n; ++i) {
      MatrixXd verts(params_.d, 2 * params_.d);
      for (int k = 0; k < params_.d; ++k) {
        verts.col(2 * k) = theta_hat_.row(i).transpose() + rho * root.col(k);
        verts.col(2 * k + 1) = theta_hat_.row(i).transpose() - rho * root.col(k);
      }
      out.push_back(std::move(verts));
    }
    return out;
  }

  double min_eigenvalue() const { return linalg::jacobi_eigen(gram_.V()).values(0); }

  const ConfidenceParams& params() const { return params_; }
  const GramState& gram() const { return gram_; }
  const MatrixXd& theta_hat() const { return theta_hat_; }
  double beta_sqrt() const { return beta_sqrt_; }
  double beta() const { return beta_sqrt_ * beta_sqrt_; }
  long t() const { return gram_.t(); }

 private:
  void refresh() {
    theta_hat_ = gram_.solve(gram_.cross()).transpose();
    beta_sqrt_ = safebandit::estimation::beta_sqrt(params_, gram_.t());
  }

  ConfidenceParams params_;
  GramState gram_;
  MatrixXd theta_hat_;
  double beta_sqrt_;
};

}  // namespace safebandit::estimation
