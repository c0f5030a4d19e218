#pragma once

// The two phases of the safe optimistic learner: uniform sphere sampling
// inside the initial safe set, then optimistic action selection over a
// refined candidate grid.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "safebandit/errors.hpp"
#include "safebandit/estimation.hpp"
#include "safebandit/safe_set.hpp"

namespace safebandit::policy {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Plays center + (radius/2)·u with u uniform on the unit sphere, so
/// E[x xᵀ] = v vᵀ + (radius²/4d) I.
class ExplorationSampler {
 public:
  ExplorationSampler(VectorXd center, double radius, std::uint64_t seed)
      : center_(std::move(center)), radius_(radius), engine_(seed) {
    if (!(radius_ >= 0.0) || !std::isfinite(radius_)) throw std::invalid_argument("ExplorationSampler: bad radius");
  }

  /// Also checks that center + B(radius/2) sits inside A ∩ G0.
  ExplorationSampler(VectorXd center, double radius, std::uint64_t seed, const safe::SafetyPolytope& safety,
                     double row_bound, const safe::ActionBox& box)
      : ExplorationSampler(std::move(center), radius, seed) {
    const double half = 0.5 * radius_;
    const double to_faces = std::min((center_ - box.lower).minCoeff(), (box.upper - center_).minCoeff());
    const double n = center_.norm();
    const VectorXd far = n > 0.0 ? VectorXd(center_ * (1.0 + half / n)) : center_;
    if (to_faces < half || safe::g0_margin(far, safety, row_bound) < 0.0)
      throw ConfigError("ExplorationSampler: sampling ball leaves the initial safe set");
    std::mt19937_64 probe(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int k = 0; k < 64; ++k)
      if (!safe::in_G0(point_on_sphere(probe), safety, row_bound))
        throw ConfigError("ExplorationSampler: sampled sphere point is outside the initial safe set");
  }

  VectorXd sample() { return point_on_sphere(engine_); }

  const VectorXd& center() const { return center_; }
  double radius() const { return radius_; }
  double lambda_minus() const { return radius_ * radius_ / (4.0 * static_cast<double>(center_.size())); }

 private:
  VectorXd point_on_sphere(std::mt19937_64& engine) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    VectorXd u(center_.size());
    double norm = 0.0;
    while (!(norm > 1e-12)) {
      for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = gauss(engine);
      norm = u.norm();
    }
    return center_ + (0.5 * radius_ / norm) * u;
  }

  VectorXd center_;
  double radius_;
  std::mt19937_64 engine_;
};

struct Schedule {
  long T = 0;
  long T_prime = 0;
  double t_delta = 0.0;
  double t_h = 0.0;
  double H_inf = 0.0;
  double lambda_minus = 0.0;
  bool theoretical = true;
};

/// How T′ is chosen: the analysis rule max(T^{2/3}, t_δ, t_h) or a fixed length.
struct ScheduleMode {
  std::optional<long> override_T_prime;

  static ScheduleMode theory() { return {}; }
  static ScheduleMode fixed(long t_prime) { return {t_prime}; }
};

/// t_δ = 8L²/λ₋ log(d/δ); t_h = 8β_T L²/(λ₋ H²) − 2ν/λ₋.
inline Schedule make_schedule(long T, const estimation::ConfidenceParams& params, double H_inf, double lambda_minus,
                              ScheduleMode mode = ScheduleMode::theory()) {
  if (!(H_inf > 0.0)) throw std::invalid_argument("schedule: H_inf must be positive");
  if (!(lambda_minus > 0.0)) throw std::invalid_argument("schedule: lambda_minus must be positive");
  if (T < 1) throw std::invalid_argument("schedule: horizon must be positive");

  Schedule s;
  s.T = T;
  s.H_inf = H_inf;
  s.lambda_minus = lambda_minus;
  const double L2 = params.action_bound * params.action_bound;
  const double beta_T = std::pow(estimation::beta_sqrt(params, T), 2);
  s.t_delta = 8.0 * L2 / lambda_minus * std::log(static_cast<double>(params.d) / params.delta);
  s.t_h = 8.0 * beta_T * L2 / (lambda_minus * H_inf * H_inf) - 2.0 * params.nu / lambda_minus;

  if (mode.override_T_prime) {
    s.theoretical = false;
    s.T_prime = *mode.override_T_prime;
    if (s.T_prime < 0) throw std::invalid_argument("schedule: negative T' override");
  } else {
    const double cube_root = std::cbrt(static_cast<double>(T));
    const double need = std::max({cube_root * cube_root, s.t_delta, s.t_h});
    s.T_prime = need >= static_cast<double>(T) ? T : static_cast<long>(std::ceil(need));
  }
  if (s.T_prime >= T)
    throw InfeasibleScheduleError("schedule: exploration length " + std::to_string(s.T_prime) +
                                  " (t_delta=" + std::to_string(s.t_delta) + ", t_h=" + std::to_string(s.t_h) +
                                  ") does not leave room before horizon " + std::to_string(T));
  return s;
}

/// Regular grid with `points_per_axis` points spanning [lower, upper] on each
/// axis; points outside `clip` are clamped onto it.
struct CandidateGrid {
  VectorXd lower;
  VectorXd upper;
  int points_per_axis = 21;
  safe::ActionBox clip;

  static CandidateGrid over(const safe::ActionBox& box, int points_per_axis) {
    if (points_per_axis < 1) throw std::invalid_argument("CandidateGrid: need at least one point per axis");
    return {box.lower, box.upper, points_per_axis, box};
  }

  Eigen::Index dim() const { return lower.size(); }

  VectorXd cell() const {
    return points_per_axis > 1 ? VectorXd((upper - lower) / (points_per_axis - 1)) : VectorXd::Zero(dim());
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (Eigen::Index c = 0; c < dim(); ++c) n *= static_cast<std::size_t>(points_per_axis);
    return n;
  }

  /// d × N matrix; first axis varies fastest.
  MatrixXd points() const {
    const Eigen::Index d = dim();
    const auto total = static_cast<Eigen::Index>(size());
    MatrixXd out(d, total);
    const VectorXd step = cell();
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (Eigen::Index col = 0; col < total; ++col) {
      for (Eigen::Index c = 0; c < d; ++c)
        out(c, col) = points_per_axis > 1 ? lower(c) + step(c) * idx[static_cast<std::size_t>(c)]
                                          : 0.5 * (lower(c) + upper(c));
      for (Eigen::Index c = 0; c < d && ++idx[static_cast<std::size_t>(c)] == points_per_axis; ++c)
        idx[static_cast<std::size_t>(c)] = 0;
    }
    return out.cwiseMax(clip.lower.replicate(1, total)).cwiseMin(clip.upper.replicate(1, total));
  }
};

/// Same cardinality, cell scaled by shrink_factor, centered at `around`.
inline CandidateGrid refine_candidates(const CandidateGrid& grid, const VectorXd& around, double shrink_factor) {
  if (!(shrink_factor > 0.0)) throw std::invalid_argument("refine_candidates: shrink_factor must be positive");
  const VectorXd half = 0.5 * (grid.upper - grid.lower) * shrink_factor;
  return {around - half, around + half, grid.points_per_axis, grid.clip};
}

enum class Mode { kExactEllipsoid, kL1Vertices };

inline const char* mode_name(Mode m) { return m == Mode::kExactEllipsoid ? "exact" : "l1"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "exact" || s == "exact-ellipsoid") return Mode::kExactEllipsoid;
  if (s == "l1" || s == "l1-vertices") return Mode::kL1Vertices;
  throw std::invalid_argument("unknown policy mode '" + s + "' (expected exact or l1)");
}

struct OptimisticChoice {
  VectorXd x;
  MatrixXd theta_tilde;
  double value = -std::numeric_limits<double>::infinity();
  double margin = 0.0;  // conservative safety slack of x
};

/// Optimistic reward of single candidates. Exact mode: aᵀΘ̂x + √β_t ‖x‖_{V⁻¹} ‖a‖₁.
/// ℓ1 mode: Σ_i max over the 2d vertices v of row i of a_i vᵀx.
class ValueEvaluator {
 public:
  ValueEvaluator(const estimation::ConfidenceState& conf, const VectorXd& reward_dir, Mode mode)
      : mode_(mode), d_(conf.params().d), n_(conf.params().n) {
    if (reward_dir.size() != n_) throw std::invalid_argument("ValueEvaluator: reward size mismatch");
    const VectorXd at = conf.theta_hat().transpose() * reward_dir;
    at_.assign(at.data(), at.data() + d_);
    bonus_ = conf.beta_sqrt() * reward_dir.lpNorm<1>();
    if (mode_ == Mode::kL1Vertices) {
      verts_ = conf.l1_vertices();
      scaled_.resize(static_cast<std::size_t>(n_ * 2 * d_ * d_));
      for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index k = 0; k < 2 * d_; ++k)
          for (Eigen::Index c = 0; c < d_; ++c)
            scaled_[static_cast<std::size_t>((i * 2 * d_ + k) * d_ + c)] =
                reward_dir(i) * verts_[static_cast<std::size_t>(i)](c, k);
    }
  }

  /// `weighted` is ‖x‖_{V⁻¹}, only read in exact mode.
  double value(const double* x, double weighted) const {
    if (mode_ == Mode::kExactEllipsoid) {
      double v = 0.0;
      for (Eigen::Index c = 0; c < d_; ++c) v += at_[static_cast<std::size_t>(c)] * x[c];
      return v + bonus_ * weighted;
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) total += row_best(i, x, nullptr);
    return total;
  }

  /// Index (column of l1_vertices()[i]) of the best vertex of row i; first wins ties.
  Eigen::Index best_vertex(Eigen::Index i, const double* x) const {
    Eigen::Index arg = 0;
    row_best(i, x, &arg);
    return arg;
  }

  const std::vector<MatrixXd>& vertices() const { return verts_; }

 private:
  double row_best(Eigen::Index i, const double* x, Eigen::Index* arg) const {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < 2 * d_; ++k) {
      const double* v = &scaled_[static_cast<std::size_t>((i * 2 * d_ + k) * d_)];
      double s = 0.0;
      for (Eigen::Index c = 0; c < d_; ++c) s += v[c] * x[c];
      if (s > best) {
        best = s;
        if (arg) *arg = k;
      }
    }
    return best;
  }

  Mode mode_;
  Eigen::Index d_;
  Eigen::Index n_;
  std::vector<double> at_;
  double bonus_ = 0.0;
  std::vector<MatrixXd> verts_;
  std::vector<double> scaled_;
};

/// Optimistic value of every column of xs.
inline VectorXd optimistic_values(const MatrixXd& xs, const estimation::ConfidenceState& conf,
                                  const VectorXd& reward_dir, Mode mode) {
  const ValueEvaluator values(conf, reward_dir, mode);
  const VectorXd wn = conf.weighted_norms(xs);
  VectorXd out(xs.cols());
  for (Eigen::Index col = 0; col < xs.cols(); ++col) out(col) = values.value(xs.col(col).data(), wn(col));
  return out;
}

/// Best candidate of `grid` that passes the C_t-robust safety test, together
/// with the maximizing parameter. Ties go to the lowest candidate index.
inline OptimisticChoice select_optimistic(const estimation::ConfidenceState& conf,
                                          const safe::SafetyPolytope& safety, const VectorXd& reward_dir,
                                          const CandidateGrid& grid, Mode mode) {
  if (reward_dir.size() != conf.params().n) throw std::invalid_argument("select_optimistic: reward size mismatch");
  if (grid.dim() != conf.params().d) throw std::invalid_argument("select_optimistic: grid dimension mismatch");
  const safe::MarginEvaluator margins(conf, safety);
  const ValueEvaluator values(conf, reward_dir, mode);

  const Eigen::Index d = grid.dim();
  const VectorXd step = grid.cell();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  VectorXd x(d), best_x(d);
  double best_value = -std::numeric_limits<double>::infinity(), best_margin = 0.0;
  bool found = false;
  const std::size_t total = grid.size();
  for (std::size_t col = 0; col < total; ++col) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const double raw = grid.points_per_axis > 1 ? grid.lower(c) + step(c) * idx[static_cast<std::size_t>(c)]
                                                  : 0.5 * (grid.lower(c) + grid.upper(c));
      x(c) = std::min(std::max(raw, grid.clip.lower(c)), grid.clip.upper(c));
    }
    for (Eigen::Index c = 0; c < d && ++idx[static_cast<std::size_t>(c)] == grid.points_per_axis; ++c)
      idx[static_cast<std::size_t>(c)] = 0;

    const double wn = margins.weighted_norm(x.data());
    if (!margins.passes(x.data(), wn)) continue;
    const double v = values.value(x.data(), wn);
    if (!found || v > best_value) {
      found = true;
      best_value = v;
      best_x = x;
    }
  }
  if (!found) throw EmptySafeSetError("select_optimistic: no candidate passes the safety test");
  best_margin = margins.margin(best_x.data());

  OptimisticChoice choice;
  choice.x = best_x;
  choice.value = best_value;
  choice.margin = best_margin;
  choice.theta_tilde = conf.theta_hat();
  if (mode == Mode::kExactEllipsoid) {
    const double wn = conf.weighted_norm(choice.x);
    if (wn > 0.0) {
      const VectorXd dir = conf.gram().solve(choice.x) / wn;
      for (Eigen::Index i = 0; i < reward_dir.size(); ++i) {
        const double sign = (reward_dir(i) > 0.0) - (reward_dir(i) < 0.0);
        choice.theta_tilde.row(i) += sign * conf.beta_sqrt() * dir.transpose();
      }
    }
  } else {
    for (Eigen::Index i = 0; i < reward_dir.size(); ++i)
      choice.theta_tilde.row(i) =
          values.vertices()[static_cast<std::size_t>(i)].col(values.best_vertex(i, choice.x.data())).transpose();
  }
  return choice;
}

struct SearchOptions {
  int points_per_axis = 21;
  int refine_passes = 2;
  double shrink_factor = 0.25;
};

/// Full-box grid followed by local refinements around the running best.
inline OptimisticChoice maximize_optimistic(const estimation::ConfidenceState& conf,
                                            const safe::SafetyPolytope& safety, const VectorXd& reward_dir,
                                            const safe::ActionBox& box, Mode mode, const SearchOptions& opt) {
  CandidateGrid grid = CandidateGrid::over(box, opt.points_per_axis);
  OptimisticChoice best = select_optimistic(conf, safety, reward_dir, grid, mode);
  for (int pass = 0; pass < opt.refine_passes; ++pass) {
    grid = refine_candidates(grid, best.x, opt.shrink_factor);
    try {
      OptimisticChoice local = select_optimistic(conf, safety, reward_dir, grid, mode);
      if (local.value > best.value) best = std::move(local);
    } catch (const EmptySafeSetError&) {
      // keep the previous answer
    }
  }
  return best;
}

}  // namespace safebandit::policy
