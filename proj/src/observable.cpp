#include "heavysum/observable.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "heavysum/density.hpp"
#include "heavysum/errors.hpp"

namespace heavysum {

SingularObservable::SingularObservable(double a, double s, double x, PsiKind psi, double psi_c)
    : a_(a), s_(s), x_(wrap01(x)), psi_(psi), c_(psi == PsiKind::kZero ? 0.0 : psi_c) {
  if (!(a > 0.0) || !std::isfinite(a)) throw PreconditionViolation("observable amplitude a must be > 0");
  if (!(s > 0.0) || !std::isfinite(s)) throw PreconditionViolation("tail index s must be > 0");
  if (!std::isfinite(psi_c)) throw PreconditionViolation("psi coefficient must be finite");
  inv_s_ = 1.0 / s;
  double r = std::round(inv_s_);
  int_power_ = (r >= 1.0 && r <= 4.0 && std::fabs(inv_s_ - r) < 1e-15) ? static_cast<int>(r) : 0;
}

double SingularObservable::psi_bound() const noexcept { return std::fabs(c_); }

double SingularObservable::psi(double y) const noexcept {
  if (psi_ == PsiKind::kZero) return 0.0;
  return c_ * std::cos(2.0 * std::numbers::pi * y);
}

double SingularObservable::singular_part(double d) const noexcept {
  if (!(d > 0.0)) return kInf;
  switch (int_power_) {
    case 1: return a_ / d;
    case 2: return a_ / (d * d);
    case 3: return a_ / (d * d * d);
    case 4: { double d2 = d * d; return a_ / (d2 * d2); }
    default: return a_ * std::pow(d, -inv_s_);
  }
}

double SingularObservable::distance_at(double v) const noexcept {
  if (!(v > 0.0)) return kInf;
  if (std::isinf(v)) return 0.0;
  return std::pow(a_ / v, s_);
}

double SingularObservable::operator()(double y) const noexcept {
  double d = circle_distance(y, x_);
  return singular_part(d) + psi(y);
}

std::string SingularObservable::describe() const {
  std::ostringstream os;
  os << "phi: a=" << a_ << " s=" << s_ << " x=" << x_;
  if (psi_ == PsiKind::kCosine) os << " psi=" << c_ << "*cos(2pi y)";
  return os.str();
}

CutLevels thresholds(double N, double s, double delta, double D) {
  if (!(N >= 3.0)) throw DomainError("thresholds need N >= 3");
  if (!(s > 0.0) || delta < 0.0 || D < 0.0) throw PreconditionViolation("thresholds need s > 0, delta >= 0, D >= 0");
  double base = std::pow(N, 1.0 / s);
  double lg = std::log(N);
  return {base * std::pow(lg, delta), base * std::pow(lg, -D)};
}

double normalizer(double N, double s, double alpha) {
  if (!(N >= 3.0)) throw DomainError("normalizer needs N >= 3");
  return std::pow(N, 1.0 / s) * std::pow(std::log(N), alpha);
}

TruncationSpec TruncationSpec::band(double l, double u) {
  if (!(l < u)) throw PreconditionViolation("band truncation needs l < u");
  return {TruncationKind::kBand, u, l};
}

// For the cosine catalog the ray is monotone whenever the singular slope
// dominates near the crossing, which holds at every level of interest.
double crossing_distance(const SingularObservable& phi, double v, int side) {
  auto at = [&](double d) { return phi(phi.x() + side * d); };
  if (at(0.5) >= v) return 0.5;
  if (phi.psi_kind() == PsiKind::kZero) return std::min(phi.distance_at(v), 0.5);
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-300; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (at(mid) >= v) lo = mid; else hi = mid;
  }
  return lo;
}

namespace {

struct DRange {
  double lo, hi;
};

// Kept set of the truncation along one ray, as a d-interval.
DRange kept_range(const SingularObservable& phi, const TruncationSpec& spec, int side) {
  switch (spec.kind) {
    case TruncationKind::kNone: return {0.0, 0.5};
    case TruncationKind::kUpperTail: return {0.0, crossing_distance(phi, spec.u, side)};
    case TruncationKind::kLower: return {crossing_distance(phi, spec.u, side), 0.5};
    case TruncationKind::kBand: return {crossing_distance(phi, spec.u, side), crossing_distance(phi, spec.l, side)};
  }
  return {0.0, 0.0};
}

// Mass of the arc from x - dm to x + dp.
double asymmetric_arc(const DensityEstimate& mu, double x, double dm, double dp) {
  double len = dm + dp;
  if (len >= 1.0) return mu.total_mass();
  double lo = wrap01(x - dm);
  double hi = lo + len;
  if (hi <= 1.0) return mu.interval_mass(lo, hi);
  return mu.interval_mass(lo, 1.0) + mu.interval_mass(0.0, hi - 1.0);
}

constexpr double kCore = 1e-6;

}  // namespace

double centering_constant(const SingularObservable& phi, const TruncationSpec& spec,
                          const DensityEstimate& density) {
  if (phi.s() <= 1.0) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  const double x = phi.x();
  const double p = 1.0 - 1.0 / phi.s();  // exponent of the core antiderivative
  double total = 0.0;
  double err_total = 0.0;
  double abs_total = 0.0;
  for (int side : {+1, -1}) {
    DRange r = kept_range(phi, spec, side);
    if (!(r.hi > r.lo)) continue;
    // core: power part in closed form against the local density level
    double core_hi = std::min(r.hi, kCore);
    if (core_hi > r.lo) {
      double rho = density.at(wrap01(x + side * 0.5 * (r.lo + core_hi)));
      double power = phi.a() * (std::pow(core_hi, p) - std::pow(r.lo, p)) / p;
      double part = rho * (power + phi.psi(x) * (core_hi - r.lo));
      total += part;
      abs_total += std::fabs(part);
    }
    double lo = std::max(r.lo, kCore);
    if (!(r.hi > lo)) continue;
    std::vector<double> cuts{lo, r.hi};
    for (double d = kCore; d < r.hi; d *= 2.0)
      if (d > lo) cuts.push_back(d);
    const std::size_t bins = density.bins();
    if (bins > 1) {
      for (std::size_t k = 0; k < bins; ++k) {
        double e = static_cast<double>(k) / static_cast<double>(bins);
        double d = side > 0 ? wrap01(e - x) : wrap01(x - e);
        if (d > lo && d < r.hi) cuts.push_back(d);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto f = [&](double d) {
      double y = wrap01(x + side * d);
      return phi(y) * density.at(y);
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      // Boost's own error output is not rescaled to the subinterval, so the
      // estimate is the disagreement between the 21- and 31-point rules.
      double l1 = 0.0;
      double v = gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 12, 1e-13, nullptr, &l1);
      double w = gauss_kronrod<double, 21>::integrate(f, cuts[i], cuts[i + 1], 12, 1e-13);
      total += v;
      err_total += std::fabs(v - w);
      abs_total += l1;
    }
  }
  if (err_total > 1e-6 * std::max(abs_total, 1e-300))
    throw QuadratureNonconvergence("centering integral did not reach relative error 1e-6");
  return total;
}

double level_set_measure(const SingularObservable& phi, double t, const DensityEstimate& density) {
  double dp = crossing_distance(phi, t, +1);
  double dm = crossing_distance(phi, t, -1);
  return asymmetric_arc(density, phi.x(), dm, dp);
}

namespace {

void finish_fit(TailFit& fit) {
  double sum = 0.0, mn = kInf, mx = -kInf;
  for (double v : fit.scaled) {
    sum += v;
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  // least squares for a constant model is the mean
  fit.fitted = sum / static_cast<double>(fit.scaled.size());
  fit.spread = fit.fitted > 0.0 ? (mx - mn) / fit.fitted : kInf;
  if (fit.spread > 0.2) throw FitUnstable("tail fit: t^s mu(phi > t) varies by more than 20% over the grid");
}

void check_grid(const SingularObservable& phi, std::span<const double> t_grid) {
  if (t_grid.empty()) throw PreconditionViolation("tail fit needs a nonempty t grid");
  for (double t : t_grid)
    if (!(t > 0.0) || !(std::pow(phi.a() / t, phi.s()) < 0.25))
      throw PreconditionViolation("tail fit needs (a/t)^s < 1/4 for every t in the grid");
}

}  // namespace

TailFit tail_constant(const SingularObservable& phi, const DensityEstimate& density,
                      std::span<const double> t_grid) {
  check_grid(phi, t_grid);
  TailFit fit;
  double rho0 = density.at(phi.x());
  fit.two_sided = 2.0 * std::pow(phi.a(), phi.s()) * rho0;
  fit.one_sided_convention = std::pow(phi.a(), phi.s()) * rho0;
  for (double t : t_grid) {
    fit.t_grid.push_back(t);
    fit.scaled.push_back(std::pow(t, phi.s()) * level_set_measure(phi, t, density));
    fit.stderr_.push_back(0.0);
  }
  finish_fit(fit);
  return fit;
}

TailFit tail_constant_sampled(const SingularObservable& phi, std::span<const double> samples, double rho0,
                              std::span<const double> t_grid) {
  check_grid(phi, t_grid);
  if (samples.empty()) throw InsufficientStatistics("tail fit needs samples");
  TailFit fit;
  fit.two_sided = 2.0 * std::pow(phi.a(), phi.s()) * rho0;
  fit.one_sided_convention = std::pow(phi.a(), phi.s()) * rho0;
  const double n = static_cast<double>(samples.size());
  for (double t : t_grid) {
    std::size_t count = 0;
    for (double y : samples)
      if (phi(y) > t) ++count;
    double p = static_cast<double>(count) / n;
    double scale = std::pow(t, phi.s());
    fit.t_grid.push_back(t);
    fit.scaled.push_back(scale * p);
    fit.stderr_.push_back(scale * std::sqrt(p * (1.0 - p) / n));
  }
  finish_fit(fit);
  return fit;
}

}  // namespace heavysum
