#pragma once

#include <string>

#include "config.hpp"

namespace heavysum::cli {

// Each command returns the process exit code: 0 pass, 1 check failed.
// ConfigError and PreconditionViolation propagate (exit 2 in main).

int simulate_paths(const ExperimentConfig& cfg);
int verify_jump_budget(const ExperimentConfig& cfg);
int verify_coverage(const ExperimentConfig& cfg);
/// Runs one named check, or every check in cfg.checks when `name` is empty.
int run_check(const ExperimentConfig& cfg, const std::string& name);
int print_report(const std::string& out);
int emit_plots(const std::string& out);

}  // namespace heavysum::cli
