#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "heavysum/circle_map.hpp"
#include "heavysum/observable.hpp"

namespace heavysum::cli {

/// Experiment configuration read from a key = value text file.
///
/// Lines are `key = value`; `#` starts a comment. Unknown keys and malformed
/// values raise ConfigError. `alpha = auto` picks the midpoint of
/// alpha_window(r, s); `D = auto` picks the smallest positive multiple of
/// delta that passes validate_D.
struct ExperimentConfig {
  // map and observable
  std::string map = "linear:2";  // linear:<m> | perturbed:<eps>
  double x = 0.3478103;
  double a = 1.0;
  double s = 0.5;
  std::string psi = "none";  // none | cosine:<c>

  // scaling
  int r = 1;
  double alpha = 0.0;  // resolved; see alpha_auto
  bool alpha_auto = true;
  double delta = 0.15;
  double D = 0.0;
  bool D_auto = true;
  double eps = 0.1;  // macroscopic level for jump counts

  // ladder and sampling
  int k_min = 14;
  int k_max = 20;
  std::size_t seeds = 100;
  std::uint64_t master_seed = 1;
  std::string source = "orbit";  // orbit | iid
  std::size_t samples = 1'000'000;
  std::size_t path_seeds = 10;
  int path_grid = 1024;

  // checks
  std::vector<std::string> checks;
  double jump_budget_max_fraction = 0.05;
  double lemma5_factor = 2.0;
  double moment_factor = 2.0;
  double alpha_bar = 0.0;  // 0: alpha / 2
  double eps_bar = 0.1;
  double sep_K = 1.0;
  double eps_hat = 0.05;
  double C = 1.0;
  std::size_t mbc_orbits = 10'000;  // orbits for the (M4) interval estimate
  int mbc_k = 20;                   // the mbc check runs at N = 2^mbc_k
  double window_c = 1.0;
  double window_eps = 0.25;
  double interval_lo = 0.4;
  double interval_hi = 0.6;

  // coverage target W = sum_j c_j 1{t >= t_j}
  std::vector<double> target_times{0.5};
  std::vector<double> target_sizes{1.0};
  double tol = 0.3;
  double coverage_factor = 2.0;

  std::string out = "out";
  bool timestamps = false;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  /// Recomputes the auto fields and checks every invariant. Throws ConfigError.
  void finalize();

  /// Sorted key = value lines with normalized values. The output directory
  /// is left out: it does not change any output byte.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), 16 hex digits.
  std::string hash() const;

  CircleMap make_map() const;
  SingularObservable make_observable() const;
  bool iid() const { return source == "iid"; }
  std::size_t horizon(int k) const { return std::size_t{1} << k; }
  int rungs() const { return k_max - k_min + 1; }

 private:
  void set(const std::string& key, const std::string& value);
};

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace heavysum::cli
