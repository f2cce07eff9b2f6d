// Command-line front end for the fault-isolation pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "subfi/classifier.hpp"
#include "subfi/config.hpp"
#include "subfi/discern.hpp"
#include "subfi/error.hpp"
#include "subfi/experiment.hpp"
#include "subfi/io.hpp"

namespace fs = std::filesystem;
using namespace subfi;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool config_required = true) {
  auto* opt = app->add_option("--config", c.config, "experiment JSON config");
  if (config_required) opt->required();
  opt->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output directory (default: config output_dir)");
  app->add_option("--seed", c.seed, "master seed override");
  app->add_flag("--quiet", c.quiet, "suppress progress output");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.monte_carlo.master_seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void say(const Common& c, const std::string& msg) {
  if (!c.quiet) std::cout << msg << '\n';
}

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subfi: data-driven fault isolation with subspace dictionaries"};
  app.require_subcommand(1);

  Common sim_c, fit_c, cls_c, dis_c, run_c, mc_c, cfg_c;

  auto* sim = app.add_subcommand("simulate", "write healthy.csv and faulty.csv for one seed");
  add_common(sim, sim_c);

  auto* fit = app.add_subcommand("fit", "estimate the kernel filter and dictionaries");
  add_common(fit, fit_c);
  std::string fit_data;
  fit->add_option("--data", fit_data, "healthy trajectory CSV (default: simulate per config)")
      ->check(CLI::ExistingFile);

  auto* cls = app.add_subcommand("classify", "residuals, angles and decisions for a trajectory");
  add_common(cls, cls_c, false);
  std::string cls_filter, cls_data;
  double cls_threshold = -1.0, cls_tie = 1e-6;
  cls->add_option("--filter", cls_filter, "directory holding filter.json and dictionaries.json")
      ->required()
      ->check(CLI::ExistingDirectory);
  cls->add_option("--data", cls_data, "trajectory CSV")->required()->check(CLI::ExistingFile);
  cls->add_option("--threshold", cls_threshold, "residual-norm threshold (default: from summary.json or 0)");
  cls->add_option("--tie", cls_tie, "tie tolerance on cos values");

  auto* dis = app.add_subcommand("discern", "pairwise dictionary intersections and zero counts");
  add_common(dis, dis_c);

  auto* run = app.add_subcommand("run", "full pipeline for the master seed");
  add_common(run, run_c);

  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo accuracy statistics");
  add_common(mc, mc_c);
  std::optional<std::size_t> mc_trials;
  mc->add_option("--trials", mc_trials, "trial count override");

  auto* cfg = app.add_subcommand("config", "print the config with every default filled in");
  add_common(cfg, cfg_c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const ExperimentConfig c = load(sim_c);
      ExperimentConfig quick = c;
      quick.discern.enabled = false;
      const RunResult r = run_scenario(quick, c.monte_carlo.master_seed, false);
      write_trajectory_csv(r.healthy, c.output_dir / "healthy.csv");
      write_trajectory_csv(r.faulty, c.output_dir / "faulty.csv");
      say(sim_c, "wrote " + (c.output_dir / "healthy.csv").string() + " and faulty.csv");
    } else if (*fit) {
      const ExperimentConfig c = load(fit_c);
      KernelFilter filter;
      FaultDictionarySet dicts;
      if (!fit_data.empty()) {
        const TrajectoryData d = read_trajectory_csv(fit_data);
        filter = estimate_kernel(d.u, d.y, c.horizon, c.rank_policy, c.pe_rel_tol);
        dicts = build_dictionaries(filter, build_signatures(filter), c.discern.rel_tol);
      } else {
        ExperimentConfig quick = c;
        quick.discern.enabled = false;
        RunResult r = run_scenario(quick, c.monte_carlo.master_seed, false);
        filter = std::move(r.filter);
        dicts = std::move(r.dictionaries);
      }
      write_json(filter_to_json(filter), c.output_dir / "filter.json");
      write_json(dictionaries_to_json(dicts), c.output_dir / "dictionaries.json");
      say(fit_c, "estimated order " + std::to_string(filter.estimated_n) + ", residual dimension " +
                     std::to_string(filter.r));
    } else if (*cls) {
      const fs::path dir = cls_filter;
      const KernelFilter filter = filter_from_json(read_json(dir / "filter.json"));
      const FaultDictionarySet dicts = dictionaries_from_json(read_json(dir / "dictionaries.json"));
      double threshold = cls_threshold;
      if (threshold < 0.0) {
        threshold = 0.0;
        if (fs::exists(dir / "summary.json")) {
          threshold = read_json(dir / "summary.json").value("residual_threshold", 0.0);
        }
      }
      const TrajectoryData d = read_trajectory_csv(cls_data);
      const ResidualTrace r = residual(filter, d.u, d.y);
      const AngleTrace a = angles(r, dicts);
      const auto decisions = decide(a, threshold, cls_tie);
      const fs::path out = cls_c.out.empty() ? dir : fs::path(cls_c.out);
      write_residuals_csv(r, out / "residuals.csv");
      write_angles_csv(a, out / "angles.csv");
      write_decisions_csv(decisions, out / "decisions.csv");
      say(cls_c, "classified " + std::to_string(decisions.size()) + " windows into " + out.string());
    } else if (*dis) {
      const ExperimentConfig c = load(dis_c);
      const RunResult r = run_scenario(c, c.monte_carlo.master_seed, true);
      if (!r.report) throw Error(ErrorCode::InvalidConfig, "config.discern.enabled is false");
      write_json(report_to_json(*r.report), c.output_dir / "discernibility.json");
      for (const auto& p : r.report->pairs) {
        say(dis_c, p.first.label() + " / " + p.second.label() + ": d_cap = " +
                       std::to_string(p.d_cap) + (p.d_cap > 0 ? "  (indiscernible)" : ""));
      }
    } else if (*run) {
      const ExperimentConfig c = load(run_c);
      const RunResult r = run_scenario(c, c.monte_carlo.master_seed, true);
      write_run(r, c, c.output_dir);
      say(run_c, "fault-active accuracy " + pct(r.accuracy.fault_active) +
                     ", excluding transients " + pct(r.accuracy.excluding_transients) +
                     ", all instants " + pct(r.accuracy.all_instants));
      say(run_c, "artifacts in " + c.output_dir.string());
    } else if (*mc) {
      ExperimentConfig c = load(mc_c);
      if (mc_trials) c.monte_carlo.trials = *mc_trials;
      if (c.monte_carlo.trials < 1) throw Error(ErrorCode::InvalidConfig, "--trials must be >= 1");
      const MonteCarloSummary s = monte_carlo(c);
      write_json(monte_carlo_to_json(s, c), c.output_dir / "summary.json");
      say(mc_c, std::to_string(s.succeeded) + "/" + std::to_string(s.trials.size()) +
                    " trials; fault-active accuracy mean " + pct(s.fault_active.mean) +
                    ", stddev " + pct(s.fault_active.stddev));
      for (const auto& f : s.failures) say(mc_c, "failed: " + f);
    } else if (*cfg) {
      std::cout << config_to_json(load(cfg_c)).dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
