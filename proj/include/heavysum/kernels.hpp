#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "heavysum/circle.hpp"
#include "heavysum/events.hpp"

namespace heavysum {

/// Orbit sums of phi(y) = a d(y, x)^(-1/s) (psi = 0) under the doubling map
/// along a dyadic ladder N = 2^k_min .. 2^k_max, one orbit per seed.
///
/// Terms with d <= d_floor are logged individually; the rest only enter the
/// running sums recorded at each rung (when small_sums is set). Every query
/// below is exact as long as its thresholds sit at or above the value at
/// d_floor.
struct LadderJob {
  double x = 0.0;
  double a = 1.0;
  double s = 0.5;
  int k_min = 14;
  int k_max = 24;
  double d_floor = 0.0;
  bool small_sums = false;
  PointSource source = PointSource::kOrbit;
  std::uint64_t master_seed = 1;

  std::size_t horizon(int rung) const { return std::size_t{1} << (k_min + rung); }
  int rungs() const { return k_max - k_min + 1; }
  /// phi at arc distance d (in 2^-64 units); d = 0 is read as one unit.
  double value(Fixed d) const;
  /// Largest d whose value is >= v.
  double distance_for(double v) const;
  void validate() const;
};

struct LadderEvent {
  std::uint64_t k;  // time, 1-based
  Fixed d;          // distance to x
};

struct LadderLog {
  std::uint64_t seed = 0;
  std::vector<LadderEvent> events;   // increasing k
  std::vector<double> small_prefix;  // per rung: sum of terms with d > d_floor, k <= N
};

/// One orbit per seed index in [first, first + count), OpenMP over seeds.
/// Results do not depend on the thread count.
std::vector<LadderLog> run_ladder(const LadderJob& job, std::size_t count, std::size_t first = 0);

/// Reference for one seed: the generic orbit stream and observable in double
/// precision, one point at a time.
LadderLog run_ladder_serial(const LadderJob& job, std::size_t seed_index);

/// #{k <= N : X_k > threshold}. Needs threshold >= value at d_floor.
std::size_t count_above(const LadderLog& log, const LadderJob& job, int rung, double threshold);

/// Sum of X_k over k <= N with X_k < upper. Needs small_sums and
/// upper >= value at d_floor.
double remainder_sum(const LadderLog& log, const LadderJob& job, int rung, double upper);

/// Sum of X_k over k <= N with lo < X_k <= hi. Needs lo >= value at d_floor.
double band_total(const LadderLog& log, const LadderJob& job, int rung, double lo, double hi);

/// The logged terms above threshold with k <= N, as (k, X_k).
std::vector<std::pair<std::uint64_t, double>> macroscopic_jumps(const LadderLog& log, const LadderJob& job, int rung,
                                                                double threshold);

}  // namespace heavysum
