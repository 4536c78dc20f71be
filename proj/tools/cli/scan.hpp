#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "config.hpp"
#include "heavysum/density.hpp"
#include "heavysum/path.hpp"

namespace heavysum::cli {

/// Per-horizon statistics of one orbit.
struct RungSummary {
  std::size_t N = 0;
  std::size_t macro_count = 0;  // #{k <= N : X_k > eps N^(1/s) (ln N)^alpha}
  double sup_remainder = 0.0;   // max_n |S''_n| / (N^(1/s) (ln N)^alpha)
  double band0 = 0.0;           // sum of X_k in (N^(1/s), N^(1/s) (ln N)^delta]
  bool two_humps = false;
  std::vector<std::pair<std::size_t, double>> big;  // (k, X_k) with X_k >= N^(1/s) (ln N)^delta
  std::vector<double> grid_S;   // S_n at n = i N / G, i = 0..G (only when requested)
};

struct SeedScan {
  std::size_t seed_index = 0;
  std::vector<RungSummary> rungs;
};

/// Everything that depends on the configuration but not on the seed.
class Scanner {
 public:
  explicit Scanner(const ExperimentConfig& cfg);

  SeedScan scan(std::size_t seed_index, bool with_grid) const;

  /// W'_N restricted to its jumps: X_k / norm at t = k / N.
  CadlagStep trimmed_path(const RungSummary& r) const;
  /// Grid values of W_N and W'_N (W'_N including its drift when s > 1).
  std::vector<double> grid_W(const RungSummary& r) const;
  std::vector<double> grid_W_prime(const RungSummary& r) const;
  int grid_points(std::size_t N) const;

  double norm(std::size_t N) const;
  const ExperimentConfig& config() const { return cfg_; }
  const DensityEstimate& density() const { return mu_; }

 private:
  ExperimentConfig cfg_;
  CircleMap map_;
  SingularObservable phi_;
  DensityEstimate mu_;
  double floor_ = 0.0;
  double b_full_ = 0.0;
  std::vector<double> upper_, macro_, b_first_, b_second_;
};

/// Scans every seed (OpenMP over seeds), reusing per-(seed, N) checkpoints
/// under <out>/checkpoints when their config hash matches. Seeds below
/// `grid_seeds` carry grid data, which is not checkpointed, so they are
/// always rescanned.
std::vector<SeedScan> scan_all(const Scanner& scanner, const std::filesystem::path& out, std::size_t grid_seeds);

}  // namespace heavysum::cli
