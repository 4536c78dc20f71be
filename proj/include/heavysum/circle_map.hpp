#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "heavysum/circle.hpp"
#include "heavysum/rng.hpp"

namespace heavysum {

enum class MapKind { kLinear, kPerturbedDoubling };

/// Expanding degree-m circle map. Either y -> m*y mod 1, or the perturbed
/// doubling family y -> 2y + (eps/2pi) sin(2 pi y) mod 1 with 0 <= eps < 1.
class CircleMap {
 public:
  static CircleMap linear(int m);
  static CircleMap perturbed_doubling(double eps_pert);

  MapKind kind() const noexcept { return kind_; }
  bool is_linear() const noexcept { return kind_ == MapKind::kLinear; }
  int degree() const noexcept { return degree_; }
  double eps_pert() const noexcept { return eps_; }
  /// gamma = min |f'|.
  double min_expansion() const noexcept;
  /// Lambda = max |f'|.
  double max_expansion() const noexcept;

  double operator()(double y) const noexcept;
  double derivative(double y) const noexcept;

  std::string describe() const;

 private:
  CircleMap(MapKind kind, int degree, double eps) : kind_(kind), degree_(degree), eps_(eps) {}

  MapKind kind_;
  int degree_;
  double eps_;
};

/// f(y) mod 1.
inline double step(const CircleMap& map, double y) { return map(y); }
inline double derivative(const CircleMap& map, double y) { return map.derivative(y); }

enum class OrbitMode { kExactDigits, kFloat };

struct OrbitOptions {
  std::size_t burn_in = 1000;             // float mode, Lebesgue start only
  std::size_t max_segment = std::size_t{1} << 28;
};

/// Number of base-m guard digits kept ahead of the current position in exact mode.
inline constexpr int kGuardDigits = 64;

/// Orbit generator. Exact mode (linear maps only) represents the current point
/// by its next kGuardDigits base-m digits, drawn lazily; shifting the digit
/// sequence is the map. Float mode iterates the map in double precision.
class OrbitStream {
 public:
  /// Exact stream from a Lebesgue-uniform initial point (all digits random).
  static OrbitStream exact(const CircleMap& map, std::uint64_t seed, OrbitOptions opts = {});
  /// Exact stream whose leading base-m digits are prescribed. The remaining
  /// digits are zero when `tail_seed` is empty, uniform otherwise.
  static OrbitStream exact_from_digits(const CircleMap& map, std::vector<int> digits,
                                       std::optional<std::uint64_t> tail_seed = std::nullopt,
                                       OrbitOptions opts = {});
  /// Exact stream starting at the dyadic rational y0 (m must be 2).
  static OrbitStream exact_from_point(const CircleMap& map, double y0, OrbitOptions opts = {});
  /// Float stream from a Lebesgue point followed by opts.burn_in iterations.
  static OrbitStream floating(const CircleMap& map, std::uint64_t seed, OrbitOptions opts = {});
  static OrbitStream floating_from_point(const CircleMap& map, double y0, OrbitOptions opts = {});

  OrbitMode mode() const noexcept { return mode_; }
  const CircleMap& map() const noexcept { return map_; }
  std::size_t step_count() const noexcept { return steps_; }

  /// Current point f^k(y0), k = step_count().
  double point() const;
  /// Current point as a 64-bit binary fraction. Exact for the doubling map in
  /// exact mode; otherwise the rounding of point().
  Fixed fixed_point() const;

  /// Advance one step and return the new point.
  double next();
  /// The next n points f^{k+1} y0 ... f^{k+n} y0.
  std::vector<double> orbit_segment(std::size_t n);
  /// Advance n steps without reporting points.
  void skip(std::size_t n);

 private:
  OrbitStream(const CircleMap& map, OrbitMode mode, OrbitOptions opts)
      : map_(map), mode_(mode), opts_(opts), eng_(0) {}

  int draw_digit();
  void fill_guard();
  void advance_exact();

  CircleMap map_;
  OrbitMode mode_;
  OrbitOptions opts_;
  std::size_t steps_ = 0;

  // float mode
  double y_ = 0.0;

  // exact mode
  std::deque<int> prefix_;   // prescribed digits not yet consumed
  bool random_tail_ = false;
  Engine eng_;
  // doubling fast path: 64 binary digits in a register plus a bit reservoir
  bool binary_ = false;
  Fixed window_ = 0;
  std::uint64_t reservoir_ = 0;
  int reservoir_bits_ = 0;
  // generic base-m digits (W = kGuardDigits)
  std::deque<int> digits_;
};

/// Smallest q <= q_max with d(f^q x, x) <= tol, by float iteration.
std::optional<int> detect_period(const CircleMap& map, double x, int q_max, double tol);

struct ReturnWitness {
  double rho;
  int k;
  double y;       // a point of B(x, rho) whose k-th image may lie in B(x, rho)
  bool definite;  // true: f^k y in B(x, rho) verified; false: cover could not exclude it
};

/// Whether B(x,rho) and f^{-k} B(x,rho) can intersect. For linear maps the
/// answer is exact (arc images are arcs); for smooth maps a cover with
/// spacing rho / Lambda^k and Lipschitz padding is used.
std::optional<ReturnWitness> ball_return(const CircleMap& map, double x, double rho, int k,
                                         std::size_t cover_budget = 50'000'000);

/// Smallest k in [1, k_max] at which B(x,rho) may return to itself.
std::optional<int> first_return(const CircleMap& map, double x, double rho, int k_max);

struct DiophantineReport {
  bool is_diophantine = true;  // no violation found on the tested grid
  bool exact = false;          // exact interval arithmetic (linear maps)
  std::vector<double> rho_grid;
  std::vector<ReturnWitness> witnesses;
  std::size_t pairs_tested = 0;
};

/// Tests f^{-k} B(x,rho) cap B(x,rho) = empty for rho on the dyadic grid
/// rho0, rho0/2, ... >= rho_min and every 1 <= k <= eps |ln rho|.
DiophantineReport diophantine_check(const CircleMap& map, double x, double rho_min, double eps,
                                    double rho0, std::size_t cover_budget = 50'000'000);

}  // namespace heavysum
