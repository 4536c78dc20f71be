#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heavysum/circle_map.hpp"

namespace heavysum {

enum class DensityMethod { kLebesgue, kUlam, kBirkhoff };

/// Piecewise-constant density on [0,1) with equal-width bins.
class DensityEstimate {
 public:
  DensityEstimate(std::vector<double> values, DensityMethod method);
  static DensityEstimate lebesgue(std::size_t bins = 1);

  std::size_t bins() const noexcept { return values_.size(); }
  double bin_width() const noexcept { return 1.0 / static_cast<double>(values_.size()); }
  const std::vector<double>& values() const noexcept { return values_; }
  DensityMethod method() const noexcept { return method_; }

  double at(double y) const noexcept;
  /// Measure of [lo, hi] with 0 <= lo <= hi <= 1.
  double interval_mass(double lo, double hi) const noexcept;
  /// Measure of the arc of radius r around c (whole circle if r >= 1/2).
  double arc_mass(double c, double r) const noexcept;
  /// Sum of values * bin width.
  double total_mass() const noexcept;

  DensityEstimate coarsened(std::size_t bins) const;
  double l1_distance(const DensityEstimate& other) const;

 private:
  std::vector<double> values_;
  std::vector<double> cumulative_;  // cumulative_[i] = mass of [0, i/bins)
  DensityMethod method_;
};

/// Step function of bounded variation on the circle; the test catalog for
/// mixing checks (indicators of finite unions of arcs, constants).
class CircleStep {
 public:
  static CircleStep constant(double c);
  /// Indicator of [lo, hi), wrapping through 0 when lo > hi.
  static CircleStep indicator(double lo, double hi);
  static CircleStep indicator_union(std::span<const std::pair<double, double>> arcs);

  double operator()(double y) const noexcept;
  /// Circular total variation: sum of |jumps| around the circle.
  double variation() const noexcept;
  double l1(const DensityEstimate& mu) const;
  double mean(const DensityEstimate& mu) const;
  /// ||psi||_L1 + Var(psi).
  double bv_norm(const DensityEstimate& mu) const { return l1(mu) + variation(); }
  bool nonnegative() const noexcept;

 private:
  std::vector<double> breaks_;  // sorted, in [0,1)
  std::vector<double> values_;  // value on [breaks_[i], breaks_[i+1]) cyclically
  double constant_ = 0.0;
};

/// Leading eigenvector of the Ulam transfer matrix, normalized to mass 1.
/// Linear maps use exact arc images; smooth maps use `samples_per_bin`
/// jittered stratified points per bin. Throws NonConvergence.
DensityEstimate ulam_density(const CircleMap& map, std::size_t bins, std::size_t max_iterations = 10'000,
                             std::size_t samples_per_bin = 64, std::uint64_t seed = 1);

/// Lebesgue for linear maps (exact), Ulam with 4096 bins otherwise.
DensityEstimate invariant_density(const CircleMap& map);

/// Histogram of one orbit (exact stream for linear maps, float with burn-in otherwise).
DensityEstimate birkhoff_density(const CircleMap& map, std::size_t bins, std::size_t steps,
                                 std::uint64_t seed, std::size_t burn_in = 1000);

struct CorrelationEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// E(psi1 * psi2 o f^n) - E psi1 E psi2 by Monte Carlo over mu.
CorrelationEstimate correlation(const CircleMap& map, const CircleStep& psi1, const CircleStep& psi2,
                                int lag, std::size_t samples, std::uint64_t seed);

struct CorrelationReport {
  std::vector<int> lags;
  std::vector<double> values;
  std::vector<double> stderr_;
  double bv_norm1 = 0.0;   // ||psi1||_BV
  double l1_norm2 = 0.0;   // ||psi2||_L1
  double fitted_C = 0.0;
  double fitted_theta = 0.0;
  std::size_t samples = 0;
  double noise_sigmas = 3.0;

  /// Correlation magnitude above the noise floor, max(|c| - k se, 0).
  double significant(std::size_t i) const;
  /// C ||psi1||_BV ||psi2||_L1 theta^n.
  double envelope(int lag) const;
  std::string to_json() const;
};

/// Correlations at lags 0..max_lag on common samples, with the envelope fit:
/// C pinned by lag 0, theta the smallest value making the envelope hold for
/// the noise-floored correlations at every reported lag.
CorrelationReport correlation_lags(const CircleMap& map, const CircleStep& psi1, const CircleStep& psi2,
                                   int max_lag, std::size_t samples, std::uint64_t seed,
                                   const DensityEstimate& mu = DensityEstimate::lebesgue());

void fit_envelope(CorrelationReport& report);

struct MultipleCorrelation {
  double lhs = 0.0;  // E prod phi_j o f^{k_j}
  double lhs_stderr = 0.0;
  double rhs = 0.0;  // prod E phi_j
  double gap = 0.0;  // lhs - rhs
  double gap_stderr = 0.0;
  std::size_t samples = 0;
};

MultipleCorrelation multiple_correlation(const CircleMap& map, std::span<const CircleStep> phis,
                                         std::span<const int> times, std::size_t samples,
                                         std::uint64_t seed);

struct MixingBracket {
  double lower = 0.0;
  double upper = 0.0;
  bool inside = false;
};

/// Bracket of || prod phi_j o f^{k_j} ||_L1 for nonnegative BV phi_j under
/// fitted (C, theta); `inside` allows `sigmas` standard errors of slack.
MixingBracket mixing_bracket(std::span<const CircleStep> phis, std::span<const int> times, double C,
                             double theta, const MultipleCorrelation& measured, double sigmas = 3.0,
                             const DensityEstimate& mu = DensityEstimate::lebesgue());

/// Draws points distributed by mu together with their forward images at
/// chosen lags. Linear maps: exact digit sampling. Smooth maps: strided
/// float orbit after burn-in.
class MuSampler {
 public:
  MuSampler(const CircleMap& map, int max_lag, std::uint64_t seed);
  /// Fills images[n] = f^n(y) for n = 0..max_lag for a fresh sample y.
  void draw(std::span<double> images);

 private:
  CircleMap map_;
  int max_lag_;
  Engine eng_;
  double y_ = 0.0;
  std::vector<std::uint64_t> words_;
  std::vector<int> digits_;
  int digits_per_point_ = 0;
};

}  // namespace heavysum
