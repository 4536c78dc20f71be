#include "heavysum/path.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "heavysum/density.hpp"
#include "heavysum/errors.hpp"

namespace heavysum {

CadlagStep::CadlagStep(double initial, std::vector<double> jump_times, std::vector<double> levels)
    : initial_(initial), times_(std::move(jump_times)), levels_(std::move(levels)) {
  if (times_.size() != levels_.size()) throw PreconditionViolation("step path: times and levels differ in length");
  if (std::isnan(initial_)) throw PreconditionViolation("step path: NaN level");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!(times_[i] > 0.0 && times_[i] <= 1.0)) throw PreconditionViolation("step path: jump time outside (0,1]");
    if (i > 0 && !(times_[i] > times_[i - 1])) throw PreconditionViolation("step path: jump times not increasing");
    double size = jump_size(i);
    if (std::isnan(levels_[i]) || !(size != 0.0) || std::isnan(size))
      throw PreconditionViolation("step path: zero or undefined jump");
  }
}

CadlagStep CadlagStep::from_jumps(std::span<const double> times, std::span<const double> sizes) {
  if (times.size() != sizes.size()) throw PreconditionViolation("step path: times and sizes differ in length");
  std::vector<double> t, v;
  double level = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (sizes[i] == 0.0) continue;
    level += sizes[i];
    t.push_back(times[i]);
    v.push_back(level);
  }
  return CadlagStep(0.0, std::move(t), std::move(v));
}

CadlagStep CadlagStep::from_levels(double initial, std::span<const double> times, std::span<const double> levels) {
  if (times.size() != levels.size()) throw PreconditionViolation("step path: times and levels differ in length");
  std::vector<double> t, v;
  double prev = initial;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (levels[i] == prev) continue;
    t.push_back(times[i]);
    v.push_back(levels[i]);
    prev = levels[i];
  }
  return CadlagStep(initial, std::move(t), std::move(v));
}

double CadlagStep::operator()(double t) const noexcept {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return levels_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double CadlagStep::sup() const noexcept {
  double m = initial_;
  for (double v : levels_) m = std::max(m, v);
  return m;
}

double CadlagStep::inf() const noexcept {
  double m = initial_;
  for (double v : levels_) m = std::min(m, v);
  return m;
}

std::string CadlagStep::to_csv(std::size_t points) const {
  std::vector<double> grid;
  for (std::size_t i = 0; i < points; ++i)
    grid.push_back(points > 1 ? static_cast<double>(i) / static_cast<double>(points - 1) : 0.0);
  grid.insert(grid.end(), times_.begin(), times_.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::ostringstream os;
  os.precision(17);
  os << "t,value\n";
  for (double t : grid) {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it != times_.end() && *it == t) os << t << ',' << level_before(static_cast<std::size_t>(it - times_.begin())) << '\n';
    os << t << ',' << (*this)(t) << '\n';
  }
  return os.str();
}

std::string CadlagStep::jumps_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "t,size\n";
  for (std::size_t i = 0; i < times_.size(); ++i) os << times_[i] << ',' << jump_size(i) << '\n';
  return os.str();
}

CadlagStep path_from_prefix(std::span<const double> prefix, double norm) {
  const std::size_t N = prefix.size();
  std::vector<double> t, v;
  double prev = 0.0;
  for (std::size_t k = 1; k <= N; ++k) {
    double level = prefix[k - 1] / norm;
    if (level == prev) continue;
    t.push_back(static_cast<double>(k) / static_cast<double>(N));
    v.push_back(level);
    prev = level;
  }
  return CadlagStep(0.0, std::move(t), std::move(v));
}

CadlagStep build_WN(std::span<const double> X, double s, double alpha, double centering_per_step) {
  const std::size_t N = X.size();
  if (N < 3) throw DomainError("W_N needs N >= 3");
  const double norm = normalizer(static_cast<double>(N), s, alpha);
  std::vector<double> prefix(N);
  double S = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    S += X[k];
    prefix[k] = S - static_cast<double>(k + 1) * centering_per_step;
  }
  return path_from_prefix(prefix, norm);
}

namespace {

template <class Keep>
std::vector<double> prefix_where(std::span<const double> X, Keep keep, double centering) {
  std::vector<double> out(X.size());
  double S = 0.0;
  for (std::size_t k = 0; k < X.size(); ++k) {
    if (keep(X[k])) S += X[k];
    out[k] = S - static_cast<double>(k + 1) * centering;
  }
  return out;
}

void require_horizon(std::size_t N) {
  if (N < 3) throw DomainError("trimming needs N >= 3");
}

}  // namespace

SplitPrefix split_S(std::span<const double> X, double s, double delta, const SingularObservable& phi,
                    const DensityEstimate& mu) {
  require_horizon(X.size());
  if (!(delta > 0.0)) throw PreconditionViolation("split needs delta > 0");
  const double u = thresholds(static_cast<double>(X.size()), s, delta, 0.0).upper;
  SplitPrefix out;
  out.b_first = centering_constant(phi, TruncationSpec::upper_tail(u), mu);
  out.b_second = centering_constant(phi, TruncationSpec::lower(u), mu);
  out.first = prefix_where(X, [u](double v) { return v >= u; }, out.b_first);
  out.second = prefix_where(X, [u](double v) { return v < u; }, out.b_second);
  return out;
}

SplitPrefix split_bar(std::span<const double> X, double s, double alpha, double delta, double D,
                      const SingularObservable& phi, const DensityEstimate& mu) {
  require_horizon(X.size());
  if (!validate_D(D, s, alpha)) throw PreconditionViolation("D violates the small/large-s condition for this (s, alpha)");
  const CutLevels c = thresholds(static_cast<double>(X.size()), s, delta, D);
  SplitPrefix out;
  out.b_first = centering_constant(phi, TruncationSpec::lower(c.lower), mu);
  out.b_second = c.lower < c.upper ? centering_constant(phi, TruncationSpec::band(c.lower, c.upper), mu) : 0.0;
  const double l = c.lower, u = c.upper;
  out.first = prefix_where(X, [l](double v) { return v < l; }, out.b_first);
  out.second = prefix_where(X, [l, u](double v) { return v >= l && v < u; }, out.b_second);
  return out;
}

TrimmedSums trimmed_sums(std::span<const double> X, double s, double alpha, double delta, double D,
                         const SingularObservable& phi, const DensityEstimate& mu) {
  TrimmedSums t;
  t.N = X.size();
  t.s = s;
  t.alpha = alpha;
  t.delta = delta;
  t.D = D;
  SplitPrefix a = split_S(X, s, delta, phi, mu);
  SplitPrefix b = split_bar(X, s, alpha, delta, D, phi, mu);
  t.cuts = thresholds(static_cast<double>(t.N), s, delta, D);
  t.S = prefix_where(X, [](double) { return true; }, 0.0);
  t.S1 = std::move(a.first);
  t.S2 = std::move(a.second);
  t.b1 = a.b_first;
  t.b2 = a.b_second;
  t.bar = std::move(b.first);
  t.bbar = std::move(b.second);
  t.bar_b = b.b_first;
  t.bbar_b = b.b_second;
  return t;
}

std::string TrimmedSums::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "n,S,S_prime,S_second,bar_S,bbar_S\n";
  for (std::size_t k = 0; k < N; ++k)
    os << k + 1 << ',' << S[k] << ',' << S1[k] << ',' << S2[k] << ',' << bar[k] << ',' << bbar[k] << '\n';
  return os.str();
}

bool validate_D(double D, double s, double alpha) {
  if (!(s > 0.0 && s < 2.0) || !(alpha > 0.0) || !(D > 0.0))
    throw PreconditionViolation("validate_D needs s in (0,2), alpha > 0, D > 0");
  if (s < 1.0) return D * (1.0 - s) + alpha > 1.0;
  return D * (2.0 - s) + 2.0 * alpha > 3.0;
}

AlphaWindow alpha_window(int r, double s) {
  if (r < 1 || !(s > 0.0 && s < 2.0)) throw PreconditionViolation("alpha window needs r >= 1, s in (0,2)");
  return {1.0 / ((r + 1) * s), 1.0 / (r * s)};
}

CadlagStep project_Hr(const CadlagStep& path, std::size_t r, double jump_floor) {
  struct Jump {
    double t, size;
  };
  std::vector<Jump> pos;
  for (std::size_t i = 0; i < path.jump_count(); ++i) {
    double z = path.jump_size(i);
    if (z > 0.0 && z > jump_floor) pos.push_back({path.jump_times()[i], z});
  }
  // jumps arrive in time order, so a stable sort keeps earlier times first on ties
  std::stable_sort(pos.begin(), pos.end(), [](const Jump& a, const Jump& b) { return a.size > b.size; });
  if (pos.size() > r) pos.resize(r);
  std::sort(pos.begin(), pos.end(), [](const Jump& a, const Jump& b) { return a.t < b.t; });
  std::vector<double> t, z;
  for (const Jump& j : pos) {
    t.push_back(j.t);
    z.push_back(j.size);
  }
  return CadlagStep::from_jumps(t, z);
}

std::vector<double> band_sum(std::span<const double> X, double s, double delta, int j) {
  require_horizon(X.size());
  if (j > 0) throw PreconditionViolation("band index must be in -q..0");
  const double N = static_cast<double>(X.size());
  const double base = std::pow(N, 1.0 / s), lg = std::log(N);
  const double lo = base * std::pow(lg, j * delta), hi = base * std::pow(lg, (j + 1) * delta);
  return prefix_where(X, [lo, hi](double v) { return v > lo && v <= hi; }, 0.0);
}

double sup_remainder(std::span<const double> S2, double s, double alpha) {
  const double norm = normalizer(static_cast<double>(S2.size()), s, alpha);
  double m = 0.0;
  for (double v : S2) m = std::max(m, std::fabs(v));
  return m / norm;
}

}  // namespace heavysum
