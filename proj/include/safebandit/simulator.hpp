#pragma once

// Environment, round loop and regret accounting for the safe optimistic learner.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "safebandit/errors.hpp"
#include "safebandit/estimation.hpp"
#include "safebandit/geometry.hpp"
#include "safebandit/linalg.hpp"
#include "safebandit/policy.hpp"
#include "safebandit/safe_set.hpp"
#include "safebandit/simplex.hpp"
#include "safebandit/text.hpp"

namespace safebandit::sim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Ground truth plus everything the agent is told about it.
struct ProblemInstance {
  MatrixXd theta_star;  // n × d
  VectorXd reward_dir;  // f(y) = aᵀy
  safe::SafetyPolytope safety;
  safe::ActionBox box;
  double action_bound = 1.0;  // L
  double noise_sigma = 0.0;   // R, Gaussian std per response coordinate
  double row_bound = 1.0;     // S
  double delta = 0.01;
  double nu = 1.0;
  long T = 1;
  std::uint64_t seed = 0;

  Eigen::Index n() const { return theta_star.rows(); }
  Eigen::Index d() const { return theta_star.cols(); }
  double lipschitz() const { return reward_dir.norm(); }

  void validate(double rank_tol = 1e-10) const {
    if (theta_star.rows() < 1 || theta_star.rows() > theta_star.cols())
      throw ConfigError("instance: need 1 <= n <= d");
    if (reward_dir.size() != n() || safety.dim() != n() || box.dim() != d())
      throw ConfigError("instance: dimension mismatch between Θ*, a, E and A");
    if (!(reward_dir.norm() > 0.0)) throw ConfigError("instance: reward direction must be nonzero");
    for (Eigen::Index i = 0; i < n(); ++i)
      if (theta_star.row(i).norm() > row_bound * (1.0 + 1e-12))
        throw ConfigError("instance: row " + std::to_string(i) + " of Θ* exceeds S");
    if (linalg::singular_values(theta_star.transpose())(0) <= rank_tol)
      throw ConfigError("instance: Θ* is not full rank");
    if (box.radius() > action_bound * (1.0 + 1e-12)) throw ConfigError("instance: action box exceeds L");
    if (!(noise_sigma >= 0.0) || !(nu > 0.0) || !(delta > 0.0 && delta < 1.0) || T < 1)
      throw ConfigError("instance: invalid sigma, nu, delta or horizon");
  }
};

inline estimation::ConfidenceParams confidence_params(const ProblemInstance& inst, double radius_scale = 1.0,
                                                      std::optional<double> beta_override = std::nullopt) {
  estimation::ConfidenceParams p;
  p.noise_scale = inst.noise_sigma;
  p.row_bound = inst.row_bound;
  p.action_bound = inst.action_bound;
  p.delta = inst.delta;
  p.nu = inst.nu;
  p.n = static_cast<int>(inst.n());
  p.d = static_cast<int>(inst.d());
  p.radius_scale = radius_scale;
  p.beta_override = beta_override;
  return p;
}

struct OptimalAction {
  VectorXd x;
  double value = 0.0;
};

/// max aᵀΘ*x over X = {x ∈ A : Θ*x ∈ E}, solved as a linear program in the
/// box-shifted variable z = x − lower ≥ 0.
inline OptimalAction optimal_action(const ProblemInstance& inst) {
  const Eigen::Index d = inst.d();
  const MatrixXd FT = inst.safety.A() * inst.theta_star;
  MatrixXd A(FT.rows() + d, d);
  A << FT, MatrixXd::Identity(d, d);
  VectorXd b(FT.rows() + d);
  b << inst.safety.b() - FT * inst.box.lower, inst.box.upper - inst.box.lower;
  const VectorXd c = inst.theta_star.transpose() * inst.reward_dir;

  const lp::Result r = lp::maximize_nonneg(c, A, b);
  if (r.status != lp::Status::kOptimal) throw ConfigError("optimal_action: feasible action set is empty");
  OptimalAction out{inst.box.lower + r.x, 0.0};
  out.x = inst.box.clamp(out.x);
  out.value = c.dot(out.x);
  return out;
}

/// Y = Θ*A ∩ E as a polytope in response space (square Θ* only).
inline geometry::Polytope feasible_response_polytope(const ProblemInstance& inst) {
  if (inst.n() != inst.d()) throw ConfigError("feasible_response_polytope: requires n == d");
  const MatrixXd inv = Eigen::FullPivLU<MatrixXd>(inst.theta_star).inverse();
  const Eigen::Index q = inst.safety.rows(), d = inst.d();
  MatrixXd A(q + 2 * d, d);
  VectorXd b(q + 2 * d);
  A << inst.safety.A(), inv, -inv;
  b << inst.safety.b(), inst.box.upper, -inst.box.lower;
  return geometry::Polytope(std::move(A), std::move(b));
}

struct Response {
  VectorXd y;
  bool safe = true;
};

inline Response step_environment(const ProblemInstance& inst, const VectorXd& x, std::mt19937_64& rng) {
  if (!x.allFinite()) throw std::invalid_argument("step_environment: non-finite action");
  const VectorXd mean = inst.theta_star * x;
  Response r{mean, inst.safety.max_violation(mean) <= 0.0};
  if (inst.noise_sigma > 0.0) {
    std::normal_distribution<double> gauss(0.0, inst.noise_sigma);
    for (Eigen::Index i = 0; i < r.y.size(); ++i) r.y(i) += gauss(rng);
  }
  return r;
}

struct PolicyConfig {
  policy::Mode mode = policy::Mode::kExactEllipsoid;
  policy::SearchOptions search;
  double radius_scale = 1.0;
  std::optional<double> beta_override;
  std::optional<MatrixXd> preload_theta;
};

enum class Phase { kExplore, kExploit, kFallback };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kExplore: return "explore";
    case Phase::kExploit: return "exploit";
    case Phase::kFallback: return "fallback";
  }
  return "?";
}

struct RoundRecord {
  long t = 0;
  Phase phase = Phase::kExplore;
  VectorXd x;
  VectorXd y;
  double reward = 0.0;
  double regret = 0.0;
  double cum_regret = 0.0;
  bool safe = true;
  double beta = 0.0;        // β_{t−1}, the radius the action was chosen with
  double lambda_min = 0.0;  // λ_min(V_{t−1})
  double margin = 0.0;      // conservative slack of x_t under C_{t−1}
  double potential = 0.0;   // min(‖x_t‖²_{V_{t−1}⁻¹}, 1)
  bool covered = true;      // Θ* ∈ C_t after absorbing round t
};

struct TrialLog {
  std::vector<RoundRecord> rounds;
  VectorXd x_star;
  double optimal_value = 0.0;
  policy::Schedule schedule;
  double potential_sum = 0.0;
  double potential_bound = 0.0;
  double lambda_min_at_T_prime = 0.0;

  double cumulative_regret() const { return rounds.empty() ? 0.0 : rounds.back().cum_regret; }

  /// Σ r_t over the exploitation phase (t > T′).
  double exploitation_regret() const {
    double total = 0.0;
    for (const RoundRecord& r : rounds)
      if (r.t > schedule.T_prime) total += r.regret;
    return total;
  }

  long violations() const {
    return static_cast<long>(std::count_if(rounds.begin(), rounds.end(), [](const RoundRecord& r) { return !r.safe; }));
  }

  long fallbacks() const {
    return static_cast<long>(
        std::count_if(rounds.begin(), rounds.end(), [](const RoundRecord& r) { return r.phase == Phase::kFallback; }));
  }

  bool covered_at(long t) const { return t >= 1 && t <= static_cast<long>(rounds.size()) && rounds[t - 1].covered; }
};

/// Rounds 1..T′ sample the exploration ball, later rounds act optimistically
/// with the confidence state from the previous round. Estimation absorbs every round.
inline TrialLog run_trial(const ProblemInstance& inst, const policy::Schedule& schedule,
                          policy::ExplorationSampler& sampler, const PolicyConfig& cfg, std::mt19937_64& rng) {
  inst.validate();
  if (schedule.T != inst.T || schedule.T_prime >= inst.T)
    throw InfeasibleScheduleError("run_trial: schedule does not match the instance horizon");

  estimation::ConfidenceState conf(confidence_params(inst, cfg.radius_scale, cfg.beta_override));
  if (cfg.preload_theta) conf.preload(*cfg.preload_theta);

  TrialLog log;
  const OptimalAction best = optimal_action(inst);
  log.x_star = best.x;
  log.optimal_value = best.value;
  log.schedule = schedule;
  log.potential_bound =
      estimation::elliptical_potential_bound(static_cast<int>(inst.d()), inst.nu, inst.T, inst.action_bound);
  log.rounds.reserve(static_cast<std::size_t>(inst.T));
  if (schedule.T_prime == 0) log.lambda_min_at_T_prime = conf.min_eigenvalue();

  double cum = 0.0;
  for (long t = 1; t <= inst.T; ++t) {
    RoundRecord rec;
    rec.t = t;
    rec.beta = conf.beta();
    rec.lambda_min = conf.min_eigenvalue();

    if (t <= schedule.T_prime) {
      rec.phase = Phase::kExplore;
      rec.x = sampler.sample();
    } else {
      try {
        rec.x = policy::maximize_optimistic(conf, inst.safety, inst.reward_dir, inst.box, cfg.mode, cfg.search).x;
        rec.phase = Phase::kExploit;
      } catch (const EmptySafeSetError&) {
        rec.x = sampler.sample();
        rec.phase = Phase::kFallback;
      }
    }
    rec.margin = safe::safety_margin(rec.x, conf, inst.safety);
    const double wn = conf.weighted_norm(rec.x);
    rec.potential = std::min(wn * wn, 1.0);
    log.potential_sum += rec.potential;

    const Response resp = step_environment(inst, rec.x, rng);
    rec.y = resp.y;
    rec.safe = resp.safe;
    rec.reward = inst.reward_dir.dot(inst.theta_star * rec.x);
    rec.regret = best.value - rec.reward;
    cum += rec.regret;
    rec.cum_regret = cum;

    conf.update(rec.x, rec.y);
    rec.covered = conf.contains(inst.theta_star);
    if (t == schedule.T_prime) log.lambda_min_at_T_prime = conf.min_eigenvalue();
    log.rounds.push_back(std::move(rec));
  }
  return log;
}

inline std::string trial_csv_header(Eigen::Index d, Eigen::Index n) {
  std::string h = "t,phase";
  for (Eigen::Index k = 1; k <= d; ++k) h += ",x" + std::to_string(k);
  for (Eigen::Index k = 1; k <= n; ++k) h += ",y" + std::to_string(k);
  h += ",reward,regret,cum_regret,safe,beta,lambda_min,margin";
  return h;
}

inline void write_trial_csv(std::ostream& out, const TrialLog& log) {
  if (log.rounds.empty()) return;
  out << trial_csv_header(log.rounds.front().x.size(), log.rounds.front().y.size()) << '\n';
  for (const RoundRecord& r : log.rounds) {
    out << r.t << ',' << phase_name(r.phase);
    for (Eigen::Index k = 0; k < r.x.size(); ++k) out << ',' << format_double(r.x(k));
    for (Eigen::Index k = 0; k < r.y.size(); ++k) out << ',' << format_double(r.y(k));
    out << ',' << format_double(r.reward) << ',' << format_double(r.regret) << ',' << format_double(r.cum_regret)
        << ',' << (r.safe ? 1 : 0) << ',' << format_double(r.beta) << ',' << format_double(r.lambda_min) << ','
        << format_double(r.margin) << '\n';
  }
}

/// The three terms of the high-probability regret bound, evaluated numerically.
struct RegretBound {
  double exploration = 0.0;
  double sharpness = 0.0;
  double bandit = 0.0;
  double shrink_argument = 0.0;  // ℓ = 2√(2β_T) L / √(2ν + λ₋T′)
  bool applicable = false;       // false when ℓ exceeds the maximum ∞-shrinkage of Y

  double total() const { return exploration + sharpness + bandit; }
};

/// `responses` is the feasible response set Y (or E when A does not restrict).
inline RegretBound theoretical_bound(const ProblemInstance& inst, const policy::Schedule& schedule,
                                     const geometry::Polytope& responses,
                                     const geometry::GeometryOptions& gopt = {}) {
  const estimation::ConfidenceParams params = confidence_params(inst);
  const double M = inst.lipschitz();
  const double n = static_cast<double>(inst.n());
  const double d = static_cast<double>(inst.d());
  const double L = inst.action_bound;
  const double T = static_cast<double>(inst.T);
  const double Tp = static_cast<double>(schedule.T_prime);
  const double beta_T = std::pow(estimation::beta_sqrt(params, inst.T), 2);

  RegretBound rb;
  rb.exploration = 2.0 * M * std::sqrt(n) * L * inst.row_bound * Tp;
  rb.shrink_argument = 2.0 * std::sqrt(2.0 * beta_T) * L / std::sqrt(2.0 * inst.nu + schedule.lambda_minus * Tp);
  rb.bandit = M * std::max(schedule.H_inf, 1.0) *
              std::sqrt(n * 8.0 * beta_T * (T - Tp) * d * std::log((1.0 + T * L * L) / (d * inst.nu)));

  const double h = geometry::max_shrinkage(responses, geometry::Norm::kLinf);
  rb.applicable = rb.shrink_argument <= h;
  if (rb.applicable)
    rb.sharpness = M * (T - Tp) * geometry::sharpness(responses, rb.shrink_argument, geometry::Norm::kLinf, gopt);
  return rb;
}

}  // namespace safebandit::sim
