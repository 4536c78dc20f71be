#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "heavysum/observable.hpp"

namespace heavysum {

class DensityEstimate;

/// Right-continuous step function on [0,1]: `initial` on [0, t_1), then
/// levels[i] on [t_i, t_{i+1}). Jump times are strictly increasing in (0,1]
/// and every jump is nonzero.
class CadlagStep {
 public:
  CadlagStep() = default;
  CadlagStep(double initial, std::vector<double> jump_times, std::vector<double> levels);

  static CadlagStep constant(double c) { return CadlagStep(c, {}, {}); }
  /// Path starting at 0 with jumps of the given sizes; zero sizes are dropped.
  static CadlagStep from_jumps(std::span<const double> times, std::span<const double> sizes);
  /// Like the constructor, but silently merges zero jumps.
  static CadlagStep from_levels(double initial, std::span<const double> times, std::span<const double> levels);

  double initial_value() const noexcept { return initial_; }
  const std::vector<double>& jump_times() const noexcept { return times_; }
  const std::vector<double>& levels() const noexcept { return levels_; }
  std::size_t jump_count() const noexcept { return times_.size(); }
  double jump_size(std::size_t i) const noexcept { return levels_[i] - (i == 0 ? initial_ : levels_[i - 1]); }
  /// Level just before the i-th jump.
  double level_before(std::size_t i) const noexcept { return i == 0 ? initial_ : levels_[i - 1]; }
  double terminal_value() const noexcept { return levels_.empty() ? initial_ : levels_.back(); }

  double operator()(double t) const noexcept;
  double sup() const noexcept;
  double inf() const noexcept;

  /// CSV (t, value) sampled on a uniform grid of `points` points plus every
  /// jump time (both one-sided values).
  std::string to_csv(std::size_t points = 1024) const;
  /// CSV (t, size) of the jumps.
  std::string jumps_csv() const;

  friend bool operator==(const CadlagStep&, const CadlagStep&) = default;

 private:
  double initial_ = 0.0;
  std::vector<double> times_;
  std::vector<double> levels_;
};

/// Path through the grid values P_k / norm at t = k/N (P has N entries, value 0 on [0, 1/N)).
CadlagStep path_from_prefix(std::span<const double> prefix, double norm);

/// W_N(k/N) = (S_k - k m) / (N^(1/s) (ln N)^alpha), m the per-step centering
/// (the integral of phi for s > 1, 0 otherwise). Throws DomainError if N < 3.
CadlagStep build_WN(std::span<const double> X, double s, double alpha, double centering_per_step = 0.0);

struct SplitPrefix {
  std::vector<double> first;   // S'_n  or barS_n
  std::vector<double> second;  // S''_n or bbarS_n
  double b_first = 0.0;
  double b_second = 0.0;
};

/// S' from terms X >= N^(1/s)(ln N)^delta, S'' from the rest, each centered
/// by its truncated mean under mu (zero when s <= 1).
SplitPrefix split_S(std::span<const double> X, double s, double delta, const SingularObservable& phi,
                    const DensityEstimate& mu);

/// barS from terms X < N^(1/s)(ln N)^(-D), bbarS from N^(1/s)(ln N)^(-D) <= X < N^(1/s)(ln N)^delta.
/// Throws PreconditionViolation unless validate_D(D, s, alpha).
SplitPrefix split_bar(std::span<const double> X, double s, double alpha, double delta, double D,
                      const SingularObservable& phi, const DensityEstimate& mu);

/// All layers of the trimming for one orbit segment.
struct TrimmedSums {
  std::size_t N = 0;
  double s = 0, alpha = 0, delta = 0, D = 0;
  CutLevels cuts{};
  std::vector<double> S, S1, S2, bar, bbar;  // S_n, S'_n, S''_n, barS_n, bbarS_n for n = 1..N
  double b1 = 0, b2 = 0, bar_b = 0, bbar_b = 0;

  std::string to_csv() const;
};

TrimmedSums trimmed_sums(std::span<const double> X, double s, double alpha, double delta, double D,
                         const SingularObservable& phi, const DensityEstimate& mu);

/// D(1-s) + alpha > 1 for s < 1, D(2-s) + 2 alpha > 3 for 1 <= s < 2.
bool validate_D(double D, double s, double alpha);

struct AlphaWindow {
  double lo;  // excluded
  double hi;  // included
  bool contains(double alpha) const noexcept { return alpha > lo && alpha <= hi; }
  double midpoint() const noexcept { return 0.5 * (lo + hi); }
};

/// (1/((r+1)s), 1/(rs)].
AlphaWindow alpha_window(int r, double s);

inline constexpr std::size_t kAllJumps = std::numeric_limits<std::size_t>::max();

/// Keeps the r largest positive jumps above jump_floor (ties: earlier time)
/// as a nondecreasing path from 0.
CadlagStep project_Hr(const CadlagStep& path, std::size_t r, double jump_floor = 0.0);

/// Prefix sums of X restricted to (N^(1/s)(ln N)^(j delta), N^(1/s)(ln N)^((j+1) delta)].
std::vector<double> band_sum(std::span<const double> X, double s, double delta, int j);

/// max_n |S''_n| / (N^(1/s) (ln N)^alpha), N = prefix length.
double sup_remainder(std::span<const double> S2, double s, double alpha);

}  // namespace heavysum
