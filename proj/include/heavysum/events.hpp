#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heavysum/circle_map.hpp"
#include "heavysum/observable.hpp"

namespace heavysum {

class DensityEstimate;

enum class EventKind { kExceedance, kWindow, kTildeWindow };

/// Shrinking target at horizon N with level rho_N = N^(1/s) (ln N)^t:
///   exceedance:    phi > C rho_N
///   window:        phi / rho_N in [c - eps, c + eps]
///   tilde window:  outside the window for steps 0..p0-1, inside at step p0,
///                  p0 = ceil(ln ln N)
struct EventSpec {
  EventKind kind = EventKind::kExceedance;
  double t = 1.0;   // level exponent
  double C = 1.0;   // exceedance scale
  double c = 1.0;   // window center
  double eps = 0.25;
  int period = 0;   // tilde only: period of x

  static EventSpec exceedance(double t, double C = 1.0);
  static EventSpec window(double t, double c, double eps);
  static EventSpec tilde_window(double t, double c, double eps, int period);

  double rho(double N, double s) const;
  static int p0(double N);
  /// Window half-width bound: eps < c (non-periodic x), or
  /// eps < (gamma^(q/s) - 1) c / (gamma^(q/s) + 1) for period q.
  void validate(const SingularObservable& phi, const CircleMap& map) const;
  std::string describe() const;
};

/// One arc [lo, lo + length) of the circle.
struct Arc {
  double lo;
  double length;
  bool contains(double y) const noexcept { return wrap01(y - lo) < length; }
};

/// The base set Omega (window or exceedance set, without the tilde pattern)
/// as at most two arcs around x.
class TargetSet {
 public:
  TargetSet(const EventSpec& spec, const SingularObservable& phi, double N);

  bool contains(double y) const noexcept;
  /// Fast membership for psi = 0 from the arc distance to x in 2^-64 units.
  bool contains_distance(Fixed d) const noexcept { return d >= d_lo_ && d <= d_hi_; }
  bool distance_form() const noexcept { return distance_form_; }
  const std::vector<Arc>& arcs() const noexcept { return arcs_; }
  double measure(const DensityEstimate& mu) const;
  double lebesgue_measure() const noexcept;
  double level() const noexcept { return level_; }

 private:
  const SingularObservable* phi_;
  EventSpec spec_;
  double level_;
  double lo_v_, hi_v_;  // phi in [lo_v_, hi_v_] (hi inclusive, lo strict for exceedance)
  bool strict_lo_;
  std::vector<Arc> arcs_;
  bool distance_form_ = false;
  Fixed d_lo_ = 0, d_hi_ = 0;
};

/// Membership of y in Omega_{rho_N} (or its tilde variant, which follows the
/// forward orbit of y under `map`). Needs N >= 16.
bool event_indicator(const EventSpec& spec, const SingularObservable& phi, double N, double y,
                     const CircleMap& map);

struct HitRecord {
  std::size_t N = 0;
  std::vector<std::size_t> times;
  std::vector<double> values;

  std::string to_csv(std::uint64_t seed) const;
};

/// All k in 1..N whose orbit point f^k y lies in the event. Tilde events read
/// p0 points beyond N.
HitRecord hits(const EventSpec& spec, const SingularObservable& phi, OrbitStream& stream, std::size_t N);

/// s(N) = K ln N and s_hat(N) = 2 eps_hat N.
struct SeparationParams {
  double K = 1.0;
  double eps_hat = 0.05;
  double s_of(double N) const;
  double s_hat(double N) const { return 2.0 * eps_hat * N; }
};

/// Number of j in 0..r-1 with k_{j+1} - k_j >= threshold, k_0 = 0.
std::size_t sep_index(std::span<const std::size_t> times, double threshold);
inline std::size_t hat_sep_index(std::span<const std::size_t> times, double s_hat) { return sep_index(times, s_hat); }

struct MbcEstimate {
  std::string condition;
  std::vector<std::size_t> tuple;
  double estimate = 0.0;   // joint probability or hit frequency
  double stderr_ = 0.0;
  double reference = 0.0;  // denominator of the ratio
  double ratio = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t samples = 0;
  std::size_t effective = 0;  // samples with nonzero contribution
  std::string to_json() const;
};

/// Unbiased estimate of mu(f^{-k_1} A_1 cap ... cap f^{-k_r} A_r) for unions
/// of arcs. Linear maps: backward importance sampling through exactly
/// enumerated preimages. Other maps: plain Monte Carlo under mu.
struct JointEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t nonzero = 0;
};
JointEstimate joint_probability(const CircleMap& map, std::span<const std::vector<Arc>> sets,
                                std::span<const std::size_t> times, std::size_t samples, std::uint64_t seed);

/// (M1)_r: joint probability over the product of the sigma's, for a fully
/// separated tuple. Throws InsufficientStatistics if fewer than 50 samples
/// contribute, PreconditionViolation for an unseparated tuple.
MbcEstimate estimate_M1(const CircleMap& map, const SingularObservable& phi, std::span<const EventSpec> specs,
                        std::size_t N, std::span<const std::size_t> tuple, const SeparationParams& sep,
                        std::size_t samples, std::uint64_t seed);

struct GapDecay {
  std::vector<int> gaps;
  std::vector<double> joint;
  std::vector<double> stderr_;
  std::vector<bool> certified_empty;  // no return of the target within p steps
  double sigma = 0.0;
  std::optional<int> recurrence_bound;  // first p at which the target can return
  double theta_hat = 0.0;               // smallest theta with joint(p) <= sigma theta^p
  std::size_t samples = 0;
  bool monotone_envelope = false;       // theta_hat < 1
};

/// (M2): mu(Omega cap f^{-p} Omega) for p = p_min..p_max and the envelope fit.
GapDecay estimate_M2(const CircleMap& map, const SingularObservable& phi, const EventSpec& spec, std::size_t N,
                     int p_min, int p_max, std::size_t samples, std::uint64_t seed);

/// (M4)_*: probability of a fully separated r-tuple of hits by time N, over N^r sigma^r.
MbcEstimate estimate_M4_star(const CircleMap& map, const SingularObservable& phi, const EventSpec& spec,
                             std::size_t N, std::size_t r, const SeparationParams& sep, std::size_t samples,
                             std::uint64_t seed);

struct TimeInterval {
  double lo, hi;
  double length() const noexcept { return hi - lo; }
};

/// Source of orbit points for the interval estimator. `kIid` draws
/// independent uniform points (the i.i.d. surrogate).
enum class PointSource { kOrbit, kIid };

/// (M4)_{I;i}: probability that for every j some k with k/N in I_j hits
/// event j, over N^r prod sigma_j |I_j|. Intervals must be pairwise more than
/// min_separation apart.
MbcEstimate estimate_M4_intervals(const CircleMap& map, const SingularObservable& phi,
                                  std::span<const EventSpec> specs, std::span<const TimeInterval> intervals,
                                  std::size_t N, double min_separation, std::size_t samples, std::uint64_t seed,
                                  PointSource source = PointSource::kOrbit);

enum class SeriesVerdict { kFinite, kInfinite };

struct SeriesClassification {
  SeriesVerdict verdict;
  double exponent;  // t s r: terms decay like j^(-t s r)
  std::vector<double> partial_sums;
};

/// S_r = sum_j (2^j sigma_{rho_{2^j}})^r with sigma from the tail asymptotics.
SeriesClassification classify_Sr(std::span<const double> sigma_at_dyadic, double t, double s, int r);
/// Same, with sigma_j = 2 a^s rho0 (C rho_{2^j})^(-s) for j = 1..terms.
SeriesClassification classify_Sr(double a, double s, double rho0, double C, double t, int r, int terms);

/// #{k <= N : X_k > eps N^(1/s) (ln N)^alpha}, N = X.size().
std::size_t count_exceedances(std::span<const double> X, double eps, double s, double alpha);

struct HumpPair {
  std::size_t n1, n2;
};

/// Pairs n1 < n2 with (ln N)^((alpha - abar)/2) <= n2 - n1 <= 2 s(N) and both
/// values above eps_bar N^(1/s) (ln N)^(alpha - 1).
std::vector<HumpPair> two_humps_scan(std::span<const double> X, double s, double alpha_bar, double alpha,
                                     double eps_bar, double sN);
/// Same scan over sparse terms (k, X_k), k increasing, that include every
/// X_k above the level with k <= N.
std::vector<HumpPair> two_humps_scan(std::span<const std::pair<std::size_t, double>> terms, std::size_t N, double s,
                                     double alpha_bar, double alpha, double eps_bar, double sN);
/// eps_bar N^(1/s) (ln N)^(alpha - 1).
double two_humps_level(double N, double s, double alpha, double eps_bar);

struct MomentReport {
  double normalized = 0.0;   // mean of bbarS^m / (N^(m/s) (ln N)^(delta m)) [/(ln ln N)^m]
  double stderr_ = 0.0;
  std::size_t samples = 0;
  double variance = 0.0;          // variance of the bar-truncated summand
  double variance_envelope = 0.0; // N^(2/s - 1) (ln N)^(-D(2 - s))
};

/// Normalized m-th moment of band sums across independent orbits.
MomentReport moment_estimate(std::span<const double> band_totals, double N, double s, double delta, int m,
                             bool periodic_correction);

/// Adds the truncated-variance comparison from samples of the bar summand.
void attach_variance(MomentReport& report, std::span<const double> bar_summands, double N, double s, double D);

/// Wilson score interval for k successes in n trials at z standard errors.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.96);

}  // namespace heavysum
