#pragma once

#include <span>
#include <string>
#include <vector>

#include "heavysum/circle.hpp"

namespace heavysum {

class DensityEstimate;

enum class PsiKind { kZero, kCosine };

/// phi(y) = a d(y,x)^(-1/s) + psi(y), with psi in {0, c cos(2 pi y)} and d
/// the arc distance on the circle.
class SingularObservable {
 public:
  SingularObservable(double a, double s, double x, PsiKind psi = PsiKind::kZero, double psi_c = 0.0);

  double a() const noexcept { return a_; }
  double s() const noexcept { return s_; }
  double x() const noexcept { return x_; }
  PsiKind psi_kind() const noexcept { return psi_; }
  double psi_c() const noexcept { return c_; }
  /// L = max |psi| (closed form for the catalog).
  double psi_bound() const noexcept;

  double psi(double y) const noexcept;
  /// Singular part a d^(-1/s) at arc distance d (inf at d = 0).
  double singular_part(double d) const noexcept;
  /// Inverse of the singular part: the distance at which a d^(-1/s) = v.
  double distance_at(double v) const noexcept;
  double operator()(double y) const noexcept;

  std::string describe() const;

 private:
  double a_, s_, x_;
  PsiKind psi_;
  double c_;
  double inv_s_;
  int int_power_;  // 1/s when it is a small integer, else 0
};

inline double eval(const SingularObservable& phi, double y) { return phi(y); }

struct CutLevels {
  double upper;  // N^(1/s) (ln N)^delta
  double lower;  // N^(1/s) (ln N)^(-D)
};

/// Trimming cut levels for horizon N. Throws DomainError if N < 3.
CutLevels thresholds(double N, double s, double delta, double D);

/// N^(1/s) (ln N)^alpha.
double normalizer(double N, double s, double alpha);

enum class TruncationKind { kNone, kUpperTail, kLower, kBand };

/// X 1{X >= u} (upper tail), X 1{X < u} (lower), X 1{l <= X < u} (band).
struct TruncationSpec {
  TruncationKind kind = TruncationKind::kNone;
  double u = 0.0;
  double l = 0.0;

  bool keeps(double v) const noexcept {
    switch (kind) {
      case TruncationKind::kNone: return true;
      case TruncationKind::kUpperTail: return v >= u;
      case TruncationKind::kLower: return v < u;
      case TruncationKind::kBand: return v >= l && v < u;
    }
    return false;
  }
  static TruncationSpec none() { return {}; }
  static TruncationSpec upper_tail(double u) { return {TruncationKind::kUpperTail, u, 0.0}; }
  static TruncationSpec lower(double u) { return {TruncationKind::kLower, u, 0.0}; }
  static TruncationSpec band(double l, double u);
};

/// Largest d in (0, 1/2] with phi(x + side * d) >= v (side = +1 or -1),
/// assuming phi decreases along the ray; closed form when psi = 0.
double crossing_distance(const SingularObservable& phi, double v, int side);

/// Integral of the truncated observable against the density estimate; 0 when
/// s <= 1. The power part is integrated in closed form on a core of radius
/// 1e-6 around x, the rest by adaptive Gauss-Kronrod.
double centering_constant(const SingularObservable& phi, const TruncationSpec& spec,
                          const DensityEstimate& density);

/// mu_hat(phi > t) under a piecewise-constant density (super-level set found
/// exactly for psi = 0, by bracketing otherwise).
double level_set_measure(const SingularObservable& phi, double t, const DensityEstimate& density);

struct TailFit {
  std::vector<double> t_grid;
  std::vector<double> scaled;      // t^s mu_hat(phi > t)
  std::vector<double> stderr_;     // sampling error of `scaled` (0 when analytic)
  double fitted = 0.0;             // least-squares constant through `scaled`
  double two_sided = 0.0;          // 2 a^s rho0: direct ball computation
  double one_sided_convention = 0.0;  // a^s rho0: the a_s = rho0 a^s convention
  double spread = 0.0;             // (max - min) / mean of `scaled`
};

/// Tail constant from the density estimate. Throws FitUnstable if the spread
/// exceeds 20%, PreconditionViolation unless (a/t)^s < 1/4 on the grid.
TailFit tail_constant(const SingularObservable& phi, const DensityEstimate& density,
                      std::span<const double> t_grid);

/// Tail constant from samples y_i distributed according to mu.
TailFit tail_constant_sampled(const SingularObservable& phi, std::span<const double> samples,
                              double rho0, std::span<const double> t_grid);

}  // namespace heavysum
