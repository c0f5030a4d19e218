#pragma once

// Experiment campaigns over families of safety sets: configuration,
// reference problem setup, trial execution and CSV/text reports.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "safebandit/errors.hpp"
#include "safebandit/geometry.hpp"
#include "safebandit/linalg.hpp"
#include "safebandit/policy.hpp"
#include "safebandit/safe_set.hpp"
#include "safebandit/simulator.hpp"
#include "safebandit/text.hpp"

namespace safebandit::campaign {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class ThetaMode { kShared, kPerTrial };
enum class LRule { kVertex, kBox };

struct CampaignConfig {
  int d = 3;
  int n = 3;
  long T = 1000;
  double nu = 0.1;
  double delta = 0.01;
  double sigma = 1e-3;
  std::uint64_t seed = 1;
  int trials = 6;
  ThetaMode theta_mode = ThetaMode::kShared;
  std::vector<VectorXd> eb_sets;  // one safety set per b-vector
  std::string safety_file;        // used instead of eb_sets when nonempty
  VectorXd reward_dir;            // empty means e1
  policy::ScheduleMode schedule = policy::ScheduleMode::fixed(100);
  policy::Mode mode = policy::Mode::kExactEllipsoid;
  policy::SearchOptions search{21, 6, 0.2};
  int witness_grid = 11;
  double s_margin = 0.1;
  double l_margin = 0.1;
  LRule l_rule = LRule::kVertex;
  double box_half_width = 0.0;  // 0 means "just contain every feasible action set"
  double h_inf = 0.0;           // 0 means max ∞-shrinkage of the safety set
  double radius_scale = 1.0;
  int sharpness_points = 21;
  std::string out_dir;
  int threads = 1;
  bool write_trials = true;

  void validate() const {
    if (d < 1 || n < 1 || n > d) throw ConfigError("config: need 1 <= n <= d");
    if (T < 2) throw ConfigError("config: T must be at least 2");
    if (trials < 1) throw ConfigError("config: trials must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("config: delta must lie in (0,1)");
    if (!(nu > 0.0) || !(sigma >= 0.0)) throw ConfigError("config: nu must be positive and sigma nonnegative");
    if (safety_file.empty() && eb_sets.empty()) throw ConfigError("config: no safety set given");
    if (!safety_file.empty() && !std::filesystem::exists(safety_file))
      throw ConfigError("config: safety file '" + safety_file + "' does not exist");
    for (const VectorXd& b : eb_sets) {
      if (b.size() != n) throw ConfigError("config: eb vector length must equal n");
      if (b.minCoeff() <= 0.0) throw ConfigError("config: eb entries must be strictly positive");
    }
    if (reward_dir.size() != 0 && reward_dir.size() != n) throw ConfigError("config: reward_dir length must equal n");
    if (search.points_per_axis < 1 || search.refine_passes < 0 || !(search.shrink_factor > 0.0))
      throw ConfigError("config: invalid grid search options");
    if (sharpness_points < 1) throw ConfigError("config: sharpness_points must be positive");
  }

  friend bool operator==(const CampaignConfig& a, const CampaignConfig& b);
};

/// The three safety sets used in the sharpness experiment.
inline std::vector<VectorXd> default_eb_sets() {
  return {VectorXd::Constant(3, 0.1), (VectorXd(3) << 0.1 / 2, 0.1, 0.1).finished(),
          (VectorXd(3) << 0.1 / 3, 0.1, 0.1).finished()};
}

inline CampaignConfig reference_config() {
  CampaignConfig c;
  c.eb_sets = default_eb_sets();
  return c;
}

inline CampaignConfig smoke_config() {
  CampaignConfig c = reference_config();
  c.T = 10;
  c.trials = 1;
  c.sigma = 0.0;
  c.schedule = policy::ScheduleMode::fixed(3);
  c.search = {7, 1, 0.25};
  c.sharpness_points = 5;
  return c;
}

// ---------------------------------------------------------------------------
// key = value config text

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string render_vector(const VectorXd& v) {
  std::string out;
  for (Eigen::Index k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_double(v(k));
  return out;
}

inline VectorXd parse_vector(const std::string& s, int line) {
  const auto fields = split_fields(s, ',');
  VectorXd v(static_cast<Eigen::Index>(fields.size()));
  for (std::size_t k = 0; k < fields.size(); ++k)
    if (!parse_double(trim(fields[k]), v(static_cast<Eigen::Index>(k))))
      throw ParseError(line, "bad number '" + fields[k] + "'");
  return v;
}

template <class Int>
Int parse_int(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<Int>(v);
  } catch (const std::exception&) {
    throw ParseError(line, "bad integer '" + s + "'");
  }
}

inline double parse_real(const std::string& s, int line) {
  double v = 0.0;
  if (!parse_double(s, v)) throw ParseError(line, "bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline std::string render_schedule(const policy::ScheduleMode& m) {
  return m.override_T_prime ? "override:" + std::to_string(*m.override_T_prime) : "theory";
}

inline policy::ScheduleMode parse_schedule(const std::string& s, int line = 0) {
  if (s == "theory") return policy::ScheduleMode::theory();
  if (s.rfind("override:", 0) == 0) return policy::ScheduleMode::fixed(detail::parse_int<long>(s.substr(9), line));
  throw ParseError(line, "schedule must be 'theory' or 'override:N', got '" + s + "'");
}

inline std::string render_config(const CampaignConfig& c) {
  std::ostringstream o;
  o << "d = " << c.d << '\n'
    << "n = " << c.n << '\n'
    << "T = " << c.T << '\n'
    << "nu = " << format_double(c.nu) << '\n'
    << "delta = " << format_double(c.delta) << '\n'
    << "sigma = " << format_double(c.sigma) << '\n'
    << "seed = " << c.seed << '\n'
    << "trials = " << c.trials << '\n'
    << "theta_mode = " << (c.theta_mode == ThetaMode::kShared ? "shared" : "per_trial") << '\n';
  std::string sets;
  for (std::size_t k = 0; k < c.eb_sets.size(); ++k) sets += (k ? ";" : "") + detail::render_vector(c.eb_sets[k]);
  o << "eb_sets = " << sets << '\n'
    << "safety_file = " << c.safety_file << '\n'
    << "reward_dir = " << detail::render_vector(c.reward_dir) << '\n'
    << "schedule = " << render_schedule(c.schedule) << '\n'
    << "mode = " << policy::mode_name(c.mode) << '\n'
    << "grid_points = " << c.search.points_per_axis << '\n'
    << "refine_passes = " << c.search.refine_passes << '\n'
    << "refine_shrink = " << format_double(c.search.shrink_factor) << '\n'
    << "witness_grid = " << c.witness_grid << '\n'
    << "s_margin = " << format_double(c.s_margin) << '\n'
    << "l_margin = " << format_double(c.l_margin) << '\n'
    << "l_rule = " << (c.l_rule == LRule::kVertex ? "vertex" : "box") << '\n'
    << "box_half_width = " << format_double(c.box_half_width) << '\n'
    << "h_inf = " << format_double(c.h_inf) << '\n'
    << "radius_scale = " << format_double(c.radius_scale) << '\n'
    << "sharpness_points = " << c.sharpness_points << '\n'
    << "out_dir = " << c.out_dir << '\n'
    << "threads = " << c.threads << '\n'
    << "write_trials = " << (c.write_trials ? "true" : "false") << '\n';
  return o.str();
}

/// Unknown keys are errors; absent keys keep the reference defaults.
inline CampaignConfig parse_config(std::istream& in) {
  CampaignConfig c = reference_config();
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = detail::trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));

    if (key == "d") c.d = detail::parse_int<int>(value, line);
    else if (key == "n") c.n = detail::parse_int<int>(value, line);
    else if (key == "T") c.T = detail::parse_int<long>(value, line);
    else if (key == "nu") c.nu = detail::parse_real(value, line);
    else if (key == "delta") c.delta = detail::parse_real(value, line);
    else if (key == "sigma") c.sigma = detail::parse_real(value, line);
    else if (key == "seed") c.seed = detail::parse_int<std::uint64_t>(value, line);
    else if (key == "trials") c.trials = detail::parse_int<int>(value, line);
    else if (key == "theta_mode") {
      if (value == "shared") c.theta_mode = ThetaMode::kShared;
      else if (value == "per_trial") c.theta_mode = ThetaMode::kPerTrial;
      else throw ParseError(line, "theta_mode must be shared or per_trial");
    } else if (key == "eb_sets") {
      c.eb_sets.clear();
      if (!value.empty())
        for (const std::string& part : split_fields(value, ';')) c.eb_sets.push_back(detail::parse_vector(part, line));
    } else if (key == "safety_file") c.safety_file = value;
    else if (key == "reward_dir") c.reward_dir = value.empty() ? VectorXd() : detail::parse_vector(value, line);
    else if (key == "schedule") c.schedule = parse_schedule(value, line);
    else if (key == "mode") {
      try {
        c.mode = policy::parse_mode(value);
      } catch (const std::invalid_argument& e) {
        throw ParseError(line, e.what());
      }
    } else if (key == "grid_points") c.search.points_per_axis = detail::parse_int<int>(value, line);
    else if (key == "refine_passes") c.search.refine_passes = detail::parse_int<int>(value, line);
    else if (key == "refine_shrink") c.search.shrink_factor = detail::parse_real(value, line);
    else if (key == "witness_grid") c.witness_grid = detail::parse_int<int>(value, line);
    else if (key == "s_margin") c.s_margin = detail::parse_real(value, line);
    else if (key == "l_margin") c.l_margin = detail::parse_real(value, line);
    else if (key == "l_rule") {
      if (value == "vertex") c.l_rule = LRule::kVertex;
      else if (value == "box") c.l_rule = LRule::kBox;
      else throw ParseError(line, "l_rule must be vertex or box");
    } else if (key == "box_half_width") c.box_half_width = detail::parse_real(value, line);
    else if (key == "h_inf") c.h_inf = detail::parse_real(value, line);
    else if (key == "radius_scale") c.radius_scale = detail::parse_real(value, line);
    else if (key == "sharpness_points") c.sharpness_points = detail::parse_int<int>(value, line);
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "threads") c.threads = detail::parse_int<int>(value, line);
    else if (key == "write_trials") {
      if (value == "true") c.write_trials = true;
      else if (value == "false") c.write_trials = false;
      else throw ParseError(line, "write_trials must be true or false");
    } else throw ParseError(line, "unknown key '" + key + "'");
  }
  return c;
}

inline CampaignConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in);
}

inline bool operator==(const CampaignConfig& a, const CampaignConfig& b) { return render_config(a) == render_config(b); }

// ---------------------------------------------------------------------------
// geometry report

/// {y : s·diag(b) y ≤ 1 for every sign vector s}, i.e. ‖diag(b) y‖₁ ≤ 1.
inline safe::SafetyPolytope build_eb_safety(const VectorXd& b) {
  if (b.size() < 1 || b.size() > 20) throw ConfigError("build_eb_safety: unsupported dimension");
  if (!(b.minCoeff() > 0.0)) throw ConfigError("build_eb_safety: entries of b must be strictly positive");
  const Eigen::Index n = b.size();
  const Eigen::Index rows = Eigen::Index{1} << n;
  MatrixXd F(rows, n);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index i = 0; i < n; ++i) F(r, i) = ((r >> i) & 1 ? -1.0 : 1.0) * b(i);
  return {F, VectorXd::Ones(rows)};
}

struct GeometryReport {
  Eigen::Index rows = 0;
  Eigen::Index dim = 0;
  std::size_t vertex_count = 0;
  double condition_constant = 0.0;
  double diameter = 0.0;
  std::map<geometry::Norm, double> max_shrinkage;
  std::map<geometry::Norm, std::vector<geometry::CurvePoint>> curves;
};

inline const std::vector<geometry::Norm>& all_norms() {
  static const std::vector<geometry::Norm> norms{geometry::Norm::kL1, geometry::Norm::kL2, geometry::Norm::kLinf};
  return norms;
}

inline GeometryReport geometry_report(const geometry::Polytope& poly, const std::vector<geometry::Norm>& norms,
                                      int curve_points, const geometry::GeometryOptions& opt = {}) {
  if (geometry::is_empty(poly)) throw GeometryError(GeometryError::Kind::kEmptySet, "geometry_report: polytope is empty");
  GeometryReport r;
  r.rows = poly.rows();
  r.dim = poly.dim();
  r.vertex_count = geometry::vertices(poly, opt).size();
  r.condition_constant = geometry::condition_constant(poly, opt);
  r.diameter = geometry::diameter(poly, opt);
  for (geometry::Norm norm : norms) {
    r.max_shrinkage[norm] = geometry::max_shrinkage(poly, norm);
    if (curve_points > 0) r.curves[norm] = geometry::sharpness_curve(poly, norm, curve_points, opt);
  }
  return r;
}

inline void write_geometry_report(std::ostream& out, const GeometryReport& r) {
  out << "rows = " << r.rows << '\n'
      << "dim = " << r.dim << '\n'
      << "vertices = " << r.vertex_count << '\n'
      << "condition_constant = " << format_double(r.condition_constant) << '\n'
      << "diameter = " << format_double(r.diameter) << '\n';
  for (const auto& [norm, h] : r.max_shrinkage)
    out << "max_shrinkage_" << geometry::norm_name(norm) << " = " << format_double(h) << '\n';
}

inline void write_curve_csv(std::ostream& out, const std::vector<geometry::CurvePoint>& curve) {
  out << "delta,sharpness\n";
  for (const auto& p : curve) out << format_double(p.delta) << ',' << format_double(p.sharpness) << '\n';
}

// ---------------------------------------------------------------------------
// problem setup

struct SafetySet {
  std::string name;
  safe::SafetyPolytope polytope;
};

inline std::vector<SafetySet> safety_sets(const CampaignConfig& c) {
  std::vector<SafetySet> out;
  if (!c.safety_file.empty()) {
    std::ifstream in(c.safety_file);
    if (!in) throw ConfigError("cannot open safety file '" + c.safety_file + "'");
    out.push_back({std::filesystem::path(c.safety_file).stem().string(), read_polytope(in)});
  } else {
    for (std::size_t k = 0; k < c.eb_sets.size(); ++k)
      out.push_back({"b" + std::to_string(k + 1), build_eb_safety(c.eb_sets[k])});
  }
  for (const SafetySet& s : out)
    if (s.polytope.dim() != c.n) throw ConfigError("safety set " + s.name + " has dimension != n");
  return out;
}

/// Entries i.i.d. U[−1, 1], redrawn until full rank.
inline MatrixXd draw_theta(int n, int d, std::mt19937_64& rng, double rank_tol = 1e-10) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    MatrixXd theta(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) theta(i, j) = unif(rng);
    if (linalg::singular_values(theta.transpose())(0) > rank_tol) return theta;
  }
  throw ConfigError("draw_theta: could not draw a full-rank parameter");
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

inline constexpr std::uint32_t kThetaStream = 1;
inline constexpr std::uint32_t kNoiseStream = 2;
inline constexpr std::uint32_t kSamplerStream = 3;

struct SetSetup {
  SafetySet set;
  sim::ProblemInstance instance;
  safe::InteriorWitness witness;
  policy::Schedule schedule;
  double h_inf = 0.0;
};

/// Θ*-dependent quantities shared by every safety set of one campaign draw.
struct Setup {
  MatrixXd theta;
  double row_bound = 0.0;
  double action_bound = 0.0;
  double l_vertex = 0.0;
  double l_box = 0.0;
  bool l_adjusted = false;  // the box reached beyond the vertex-based L, so L was raised to the box radius
  safe::ActionBox box;
  std::vector<SetSetup> sets;
};

inline Setup build_setup(const CampaignConfig& c, const std::vector<SafetySet>& sets, std::uint64_t theta_seed) {
  Setup s;
  std::mt19937_64 theta_rng = make_rng(theta_seed, kThetaStream);
  s.theta = draw_theta(c.n, c.d, theta_rng);
  s.row_bound = linalg::spectral_norm(s.theta) + c.s_margin;

  double max_response = 0.0;
  double half_width = c.box_half_width;
  const bool auto_box = !(half_width > 0.0);
  if (auto_box && c.n != c.d) throw ConfigError("config: box_half_width is required when n < d");
  const MatrixXd inv = c.n == c.d ? MatrixXd(Eigen::FullPivLU<MatrixXd>(s.theta).inverse()) : MatrixXd();
  for (const SafetySet& set : sets) {
    for (const geometry::Vertex& v : geometry::vertices(set.polytope)) {
      max_response = std::max(max_response, v.point.norm());
      if (auto_box) half_width = std::max(half_width, (inv * v.point).lpNorm<Eigen::Infinity>());
    }
  }
  s.box = safe::ActionBox::symmetric(c.d, half_width);
  s.l_vertex = max_response + c.l_margin;
  s.l_box = s.box.radius();
  if (c.l_rule == LRule::kBox) {
    s.action_bound = s.l_box;
  } else {
    s.l_adjusted = s.l_box > s.l_vertex;
    s.action_bound = std::max(s.l_vertex, s.l_box);
  }

  const VectorXd reward = c.reward_dir.size() ? c.reward_dir : VectorXd(VectorXd::Unit(c.n, 0));
  for (const SafetySet& set : sets) {
    SetSetup ss{set, {}, {}, {}, 0.0};
    sim::ProblemInstance& inst = ss.instance;
    inst.theta_star = s.theta;
    inst.reward_dir = reward;
    inst.safety = set.polytope;
    inst.box = s.box;
    inst.action_bound = s.action_bound;
    inst.noise_sigma = c.sigma;
    inst.row_bound = s.row_bound;
    inst.delta = c.delta;
    inst.nu = c.nu;
    inst.T = c.T;
    inst.seed = theta_seed;
    inst.validate();

    ss.witness = safe::find_g0_witness(set.polytope, s.row_bound, s.box, c.witness_grid);
    ss.h_inf = c.h_inf > 0.0 ? c.h_inf : geometry::max_shrinkage(set.polytope, geometry::Norm::kLinf);
    const double lambda_minus =
        ss.witness.radius * ss.witness.radius / (4.0 * static_cast<double>(c.d));
    ss.schedule =
        policy::make_schedule(c.T, sim::confidence_params(inst, c.radius_scale), ss.h_inf, lambda_minus, c.schedule);
    s.sets.push_back(std::move(ss));
  }
  return s;
}

// ---------------------------------------------------------------------------
// running

struct SetSummary {
  std::string name;
  GeometryReport geometry;
  policy::Schedule schedule;
  std::vector<sim::TrialLog> logs;
  std::vector<double> mean_cum_exploit;  // index j−1 for exploitation round j
  std::vector<double> ci_half_width;     // NaN with fewer than two trials
  long violating_rounds = 0;
  long violating_trials = 0;
  long fallback_rounds = 0;
  double mean_exploit_regret = 0.0;
  double mean_total_regret = 0.0;
  sim::RegretBound bound;
  double action_bound = 0.0;
  double row_bound = 0.0;
  bool l_adjusted = false;
};

struct CampaignSummary {
  std::vector<SetSummary> sets;
};

/// Runs fn(k) for k in [0, count) on `threads` workers (at least one).
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(count, threads > 0 ? static_cast<std::size_t>(threads)
                                                                         : std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline sim::PolicyConfig policy_config(const CampaignConfig& c) {
  sim::PolicyConfig p;
  p.mode = c.mode;
  p.search = c.search;
  p.radius_scale = c.radius_scale;
  return p;
}

/// Mean and 1.96·sd/√n of exploitation-phase cumulative regret per round index.
inline void aggregate(SetSummary& s) {
  const std::size_t trials = s.logs.size();
  const long horizon = s.schedule.T - s.schedule.T_prime;
  s.mean_cum_exploit.assign(static_cast<std::size_t>(horizon), 0.0);
  s.ci_half_width.assign(static_cast<std::size_t>(horizon), std::nan(""));
  std::vector<std::vector<double>> series;
  for (const sim::TrialLog& log : s.logs) {
    std::vector<double> cum;
    double acc = 0.0;
    for (const sim::RoundRecord& r : log.rounds) {
      if (r.t <= log.schedule.T_prime) continue;
      acc += r.regret;
      cum.push_back(acc);
    }
    series.push_back(std::move(cum));
    s.violating_rounds += log.violations();
    s.violating_trials += log.violations() > 0 ? 1 : 0;
    s.fallback_rounds += log.fallbacks();
    s.mean_exploit_regret += log.exploitation_regret() / static_cast<double>(trials);
    s.mean_total_regret += log.cumulative_regret() / static_cast<double>(trials);
  }
  for (long j = 0; j < horizon; ++j) {
    double mean = 0.0;
    for (const auto& c : series) mean += c[static_cast<std::size_t>(j)];
    mean /= static_cast<double>(trials);
    s.mean_cum_exploit[static_cast<std::size_t>(j)] = mean;
    if (trials >= 2) {
      double ss = 0.0;
      for (const auto& c : series) ss += std::pow(c[static_cast<std::size_t>(j)] - mean, 2);
      const double sd = std::sqrt(ss / static_cast<double>(trials - 1));
      s.ci_half_width[static_cast<std::size_t>(j)] = 1.96 * sd / std::sqrt(static_cast<double>(trials));
    }
  }
}

inline void write_summary_csv(std::ostream& out, const CampaignSummary& summary) {
  out << "set,round,t,mean_cum_regret,ci_low,ci_high,trials\n";
  for (const SetSummary& s : summary.sets) {
    for (std::size_t j = 0; j < s.mean_cum_exploit.size(); ++j) {
      const double m = s.mean_cum_exploit[j], h = s.ci_half_width[j];
      out << s.name << ',' << j + 1 << ',' << s.schedule.T_prime + static_cast<long>(j) + 1 << ',' << format_double(m)
          << ',' << format_double(m - h) << ',' << format_double(m + h) << ',' << s.logs.size() << '\n';
    }
  }
}

inline void write_set_summary_csv(std::ostream& out, const CampaignSummary& summary) {
  out << "set,K,H1,H2,Hinf,diameter,trials,violating_rounds,violating_trials,fallback_rounds,"
         "mean_exploit_regret,mean_total_regret,T_prime,t_delta,t_h,L,S,l_adjusted,"
         "bound_exploration,bound_sharpness,bound_bandit,bound_shrink_argument,bound_applicable\n";
  for (const SetSummary& s : summary.sets) {
    const auto h = [&](geometry::Norm n) {
      const auto it = s.geometry.max_shrinkage.find(n);
      return it == s.geometry.max_shrinkage.end() ? std::nan("") : it->second;
    };
    out << s.name << ',' << format_double(s.geometry.condition_constant) << ','
        << format_double(h(geometry::Norm::kL1)) << ',' << format_double(h(geometry::Norm::kL2)) << ','
        << format_double(h(geometry::Norm::kLinf)) << ',' << format_double(s.geometry.diameter) << ','
        << s.logs.size() << ',' << s.violating_rounds << ',' << s.violating_trials << ',' << s.fallback_rounds << ','
        << format_double(s.mean_exploit_regret) << ',' << format_double(s.mean_total_regret) << ','
        << s.schedule.T_prime << ',' << format_double(s.schedule.t_delta) << ',' << format_double(s.schedule.t_h)
        << ',' << format_double(s.action_bound) << ',' << format_double(s.row_bound) << ',' << (s.l_adjusted ? 1 : 0)
        << ',' << format_double(s.bound.exploration) << ',' << format_double(s.bound.sharpness) << ','
        << format_double(s.bound.bandit) << ',' << format_double(s.bound.shrink_argument) << ','
        << (s.bound.applicable ? 1 : 0) << '\n';
  }
}

inline void write_outputs(const CampaignConfig& c, const CampaignSummary& summary) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    return f;
  };
  for (const SetSummary& s : summary.sets) {
    if (c.write_trials)
      for (std::size_t k = 0; k < s.logs.size(); ++k) {
        auto f = open("trial_" + s.name + "_" + std::to_string(k) + ".csv");
        sim::write_trial_csv(f, s.logs[k]);
      }
    {
      auto f = open("geometry_" + s.name + ".txt");
      write_geometry_report(f, s.geometry);
    }
    for (const auto& [norm, curve] : s.geometry.curves) {
      auto f = open("sharpness_" + s.name + "_" + geometry::norm_name(norm) + ".csv");
      write_curve_csv(f, curve);
    }
  }
  {
    auto f = open("summary.csv");
    write_summary_csv(f, summary);
  }
  {
    auto f = open("summary_sets.csv");
    write_set_summary_csv(f, summary);
  }
}

/// Every (set, trial) pair is one trial; trial k uses noise seed `seed + k`.
inline CampaignSummary run_campaign(const CampaignConfig& c) {
  c.validate();
  const std::vector<SafetySet> sets = safety_sets(c);
  const std::size_t n_sets = sets.size();
  const auto trials = static_cast<std::size_t>(c.trials);

  std::vector<Setup> setups;
  if (c.theta_mode == ThetaMode::kShared) {
    setups.push_back(build_setup(c, sets, c.seed));
  } else {
    for (std::size_t k = 0; k < trials; ++k) setups.push_back(build_setup(c, sets, c.seed + k));
  }
  auto setup_for = [&](std::size_t k) -> const Setup& { return setups[c.theta_mode == ThetaMode::kShared ? 0 : k]; };

  CampaignSummary summary;
  summary.sets.resize(n_sets);
  for (std::size_t s = 0; s < n_sets; ++s) {
    SetSummary& out = summary.sets[s];
    out.name = sets[s].name;
    out.geometry = geometry_report(sets[s].polytope, all_norms(), c.sharpness_points);
    out.logs.resize(trials);
    const SetSetup& first = setup_for(0).sets[s];
    out.schedule = first.schedule;
    out.action_bound = setup_for(0).action_bound;
    out.row_bound = setup_for(0).row_bound;
    out.l_adjusted = setup_for(0).l_adjusted;
    out.bound = sim::theoretical_bound(first.instance, first.schedule, first.set.polytope);
  }

  const sim::PolicyConfig pcfg = policy_config(c);
  parallel_for(n_sets * trials, c.threads, [&](std::size_t job) {
    const std::size_t s = job / trials, k = job % trials;
    const SetSetup& ss = setup_for(k).sets[s];
    const std::uint64_t trial_seed = c.seed + k;
    policy::ExplorationSampler sampler(ss.witness.center, ss.witness.radius,
                                       make_rng(trial_seed, kSamplerStream)(), ss.instance.safety,
                                       ss.instance.row_bound, ss.instance.box);
    std::mt19937_64 noise = make_rng(trial_seed, kNoiseStream);
    try {
      summary.sets[s].logs[k] = sim::run_trial(ss.instance, ss.schedule, sampler, pcfg, noise);
    } catch (const std::exception& e) {
      throw std::runtime_error("trial failed (set " + ss.set.name + ", trial " + std::to_string(k) + ", seed " +
                               std::to_string(trial_seed) + "): " + e.what());
    }
  });

  for (SetSummary& s : summary.sets) aggregate(s);
  if (!c.out_dir.empty()) write_outputs(c, summary);
  return summary;
}

}  // namespace safebandit::campaign
