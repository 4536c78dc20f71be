#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "heavysum/errors.hpp"

using namespace heavysum;
using namespace heavysum::cli;

int main(int argc, char** argv) {
  CLI::App app{"heavysum: heavy-tailed Birkhoff sums over expanding circle maps"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, n_min, n_max;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--threads", threads, "OpenMP threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory (overrides the config)");
  app.add_option("--n-min", n_min, "smallest dyadic exponent k, N = 2^k");
  app.add_option("--n-max", n_max, "largest dyadic exponent k, N = 2^k");

  auto* sim = app.add_subcommand("simulate-paths", "write W_N, W'_N and H_r projections as CSV");
  auto* budget = app.add_subcommand("verify-jump-budget", "distribution of macroscopic term counts across seeds");
  auto* cover = app.add_subcommand("verify-coverage", "J1 hit frequency of a target in H_r against its predicted rate");
  auto* check = app.add_subcommand("check", "run one named check, or the configured check list");
  std::string check_name;
  check->add_option("name", check_name, "tail | mixing | lemma5 | mbc | moments | twohumps | diophantine");
  auto* report = app.add_subcommand("report", "summarize report.json; exit 1 if any section failed");
  auto* plot = app.add_subcommand("plot", "write SVG figures for the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    if (seed) cfg.master_seed = *seed;
    if (out) cfg.out = *out;
    if (n_min) cfg.k_min = *n_min;
    if (n_max) cfg.k_max = *n_max;
    if (threads) omp_set_num_threads(*threads);

    if (report->parsed()) return print_report(cfg.out);
    if (plot->parsed()) return emit_plots(cfg.out);

    cfg.finalize();
    if (sim->parsed()) return simulate_paths(cfg);
    if (budget->parsed()) return verify_jump_budget(cfg);
    if (cover->parsed()) return verify_coverage(cfg);
    if (check->parsed()) return run_check(cfg, check_name);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionViolation& e) {
    std::cerr << "precondition violated: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
