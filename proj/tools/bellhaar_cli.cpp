// Command-line runner for bellhaar campaigns.
//
//   bellhaar run   <config> [--out DIR] [--overwrite] [--samples N] [--grid NA,NU,NG] [--workers W]
//   bellhaar check <config>
//   bellhaar sweep <config> --axis z --points K [--out DIR] [--overwrite] [--samples N] [--grid ...]

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bellhaar/campaign.hpp"

namespace {

struct Overrides
{
  std::optional<std::uint64_t> samples;
  std::vector<std::size_t> grid;
  unsigned workers{0};
};

void add_overrides(CLI::App* cmd, Overrides& o)
{
  cmd->add_option("--samples", o.samples, "Monte Carlo trials per run (overrides config)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--grid", o.grid, "Quadrature grid NA,NU,NG (overrides config)")
      ->delimiter(',')
      ->expected(3)
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  cmd->add_option("--workers", o.workers, "Worker threads (0 = all cores); results do not depend on it");
}

bellhaar::CampaignConfig load_with_overrides(const std::string& path, const Overrides& o)
{
  auto cfg = bellhaar::load_config(path);
  if (o.samples) {
    cfg.trials = *o.samples;
  }
  if (o.grid.size() == 3) {
    cfg.grid = {o.grid[0], o.grid[1], o.grid[2]};
  }
  return cfg;
}

void print_manifest(const std::vector<std::filesystem::path>& files)
{
  for (const auto& f : files) {
    std::cout << "wrote " << f.string() << "\n";
  }
}

void print_summary(const bellhaar::RunRecord& rec)
{
  for (const auto& p : rec.pairs) {
    std::cout << fmt::format("{} x {}: p_joint = {:.6f} +- {:.6f} (quadrature {:.6f})", p.a_label,
                             p.b_label, p.mc.p_joint, p.mc.se_joint, p.quad_joint);
    if (p.independence && p.independence->z_delta) {
      std::cout << fmt::format(", delta = {:.6f} (z = {:.2f})", p.independence->delta,
                               *p.independence->z_delta);
    }
    std::cout << "\n";
  }
  if (rec.chsh_mc) {
    std::cout << fmt::format("CHSH S (monte carlo) = {:.6f} +- {:.6f} [{}]\n", rec.chsh_mc->s,
                             rec.chsh_mc->se_s, bellhaar::to_string(rec.chsh_mc->verdict));
  }
  if (rec.chsh_quadrature) {
    std::cout << fmt::format("CHSH S (quadrature)  = {:.6f} [{}]\n", rec.chsh_quadrature->s,
                             bellhaar::to_string(rec.chsh_quadrature->verdict));
  }
  if (rec.lambda_bound) {
    std::cout << fmt::format("per-lambda bound: {}/{} in [-1, 0], mean {:.6f} +- {:.6f}\n",
                             rec.lambda_bound->in_bound, rec.lambda_bound->samples,
                             rec.lambda_bound->mean, rec.lambda_bound->se_mean);
  }
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Haar-shared hidden rotation CHSH laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "results";
  bool overwrite = false;
  Overrides run_overrides;
  auto* run = app.add_subcommand("run", "Run a campaign and write results");
  run->add_option("config", config_path, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--overwrite", overwrite, "Replace existing output files");
  add_overrides(run, run_overrides);

  auto* check = app.add_subcommand("check", "Validate a campaign config without running it");
  check->add_option("config", config_path, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);

  std::string axis = "z";
  std::size_t points = 0;
  Overrides sweep_overrides;
  auto* sweep = app.add_subcommand("sweep", "Sweep the relative angle between the two wings");
  sweep->add_option("config", config_path, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis, "Rotation axis of wing B relative to the first A setting")
      ->check(CLI::IsMember({"x", "y", "z"}));
  sweep->add_option("--points", points, "Number of angles in [0, pi]")->required()->check(CLI::Range(2, 100000));
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_flag("--overwrite", overwrite, "Replace existing output files");
  add_overrides(sweep, sweep_overrides);

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) {
      const auto cfg = bellhaar::load_config(config_path);
      std::cout << fmt::format("ok: '{}' ({} x {} settings, {} trials, grid {}x{}x{}, hash {})\n", cfg.name,
                               cfg.settings_a.size(), cfg.settings_b.size(), cfg.trials, cfg.grid.n_alpha,
                               cfg.grid.n_u, cfg.grid.n_gamma, bellhaar::config_hash(cfg));
      return EXIT_SUCCESS;
    }
    if (run->parsed()) {
      const auto cfg = load_with_overrides(config_path, run_overrides);
      const auto rec = bellhaar::run_campaign(cfg, {{run_overrides.workers}});
      print_summary(rec);
      print_manifest(bellhaar::emit_outputs(rec, out_dir, overwrite));
      return EXIT_SUCCESS;
    }
    if (sweep->parsed()) {
      const auto cfg = load_with_overrides(config_path, sweep_overrides);
      const auto rec = bellhaar::run_sweep(cfg, axis.front(), points, {{sweep_overrides.workers}});
      print_manifest(bellhaar::emit_outputs(rec, out_dir, overwrite));
      return EXIT_SUCCESS;
    }
  } catch (const bellhaar::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return EXIT_FAILURE;
}
