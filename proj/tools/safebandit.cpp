// Command-line front end: campaigns, geometry reports and sharpness curves.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "safebandit/campaign.hpp"

namespace {

using namespace safebandit;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string schedule;
  std::optional<int> trials;
  std::optional<int> threads;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--mode", o.mode, "policy mode")->check(CLI::IsMember({"exact", "l1"}));
  cmd->add_option("--schedule", o.schedule, "theory or override:N");
  cmd->add_option("--trials", o.trials, "trials per safety set")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

void apply(const Overrides& o, campaign::CampaignConfig& c) {
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.seed) c.seed = *o.seed;
  if (!o.mode.empty()) c.mode = policy::parse_mode(o.mode);
  if (!o.schedule.empty()) c.schedule = campaign::parse_schedule(o.schedule);
  if (o.trials) c.trials = *o.trials;
  if (o.threads) c.threads = *o.threads;
}

void print_summary(const campaign::CampaignSummary& s) {
  for (const auto& set : s.sets) {
    std::cout << set.name << ": K=" << format_double(set.geometry.condition_constant)
              << " T'=" << set.schedule.T_prime << " trials=" << set.logs.size()
              << " mean_exploit_regret=" << format_double(set.mean_exploit_regret)
              << " violations=" << set.violating_rounds << " fallbacks=" << set.fallback_rounds << '\n';
  }
}

geometry::Polytope load_polytope(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open polytope file '" + path + "'");
  return read_polytope(in);
}

std::vector<geometry::Norm> parse_norms(const std::vector<std::string>& names) {
  std::vector<geometry::Norm> out;
  for (const std::string& s : names) out.push_back(geometry::parse_norm(s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe linear bandit with polytopic constraints"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "run a campaign from a config file");
  run->add_option("--config", run_opts.config, "config path")->required()->check(CLI::ExistingFile);
  add_overrides(run, run_opts);

  Overrides smoke_opts;
  auto* smoke = app.add_subcommand("smoke", "run the tiny built-in campaign");
  add_overrides(smoke, smoke_opts);

  std::string geo_file, geo_out;
  std::vector<std::string> geo_norms{"1", "2", "inf"};
  int geo_points = 21;
  auto* geo = app.add_subcommand("geometry", "report constants of a polytope file");
  geo->add_option("polytope", geo_file, "polytope file")->required();
  geo->add_option("--norms", geo_norms, "norms among 1, 2, inf")->delimiter(',');
  geo->add_option("--points", geo_points, "sharpness curve points")->check(CLI::NonNegativeNumber);
  geo->add_option("--out", geo_out, "directory for geometry_<name>.txt and sharpness CSVs");

  std::string curve_file, curve_out, curve_norm = "2";
  int curve_points = 21;
  auto* curve = app.add_subcommand("sharpness-curve", "sharpness against shrinkage as CSV");
  curve->add_option("polytope", curve_file, "polytope file")->required();
  curve->add_option("--norm", curve_norm, "1, 2 or inf")->check(CLI::IsMember({"1", "2", "inf"}));
  curve->add_option("--points", curve_points, "number of points")->check(CLI::PositiveNumber);
  curve->add_option("--out", curve_out, "CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *smoke) {
      campaign::CampaignConfig cfg =
          *run ? campaign::load_config(run_opts.config) : campaign::smoke_config();
      apply(*run ? run_opts : smoke_opts, cfg);
      if (cfg.out_dir.empty()) cfg.out_dir = *run ? "results" : "smoke_out";
      print_summary(campaign::run_campaign(cfg));
      std::cout << "outputs in " << cfg.out_dir << '\n';
    } else if (*geo) {
      const geometry::Polytope poly = load_polytope(geo_file);
      const auto norms = parse_norms(geo_norms);
      const auto report = campaign::geometry_report(poly, norms, geo_out.empty() ? 0 : geo_points);
      campaign::write_geometry_report(std::cout, report);
      if (!geo_out.empty()) {
        std::filesystem::create_directories(geo_out);
        const std::string name = std::filesystem::path(geo_file).stem().string();
        std::ofstream txt(std::filesystem::path(geo_out) / ("geometry_" + name + ".txt"));
        campaign::write_geometry_report(txt, report);
        for (const auto& [norm, points] : report.curves) {
          std::ofstream csv(std::filesystem::path(geo_out) /
                            ("sharpness_" + name + "_" + geometry::norm_name(norm) + ".csv"));
          campaign::write_curve_csv(csv, points);
        }
      }
    } else if (*curve) {
      const auto points =
          geometry::sharpness_curve(load_polytope(curve_file), geometry::parse_norm(curve_norm), curve_points);
      if (curve_out.empty()) {
        campaign::write_curve_csv(std::cout, points);
      } else {
        std::ofstream csv(curve_out);
        if (!csv) throw ConfigError("cannot write '" + curve_out + "'");
        campaign::write_curve_csv(csv, points);
      }
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
