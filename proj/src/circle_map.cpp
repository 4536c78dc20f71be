#include "heavysum/circle_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "heavysum/binary_shift.hpp"
#include "heavysum/errors.hpp"

namespace heavysum {

CircleMap CircleMap::linear(int m) {
  if (m < 2) throw PreconditionViolation("linear circle map needs degree m >= 2");
  return CircleMap(MapKind::kLinear, m, 0.0);
}

CircleMap CircleMap::perturbed_doubling(double eps_pert) {
  if (!(eps_pert >= 0.0 && eps_pert < 1.0))
    throw PreconditionViolation("perturbed doubling needs 0 <= eps_pert < 1");
  return CircleMap(MapKind::kPerturbedDoubling, 2, eps_pert);
}

double CircleMap::min_expansion() const noexcept {
  return kind_ == MapKind::kLinear ? static_cast<double>(degree_) : 2.0 - eps_;
}

double CircleMap::max_expansion() const noexcept {
  return kind_ == MapKind::kLinear ? static_cast<double>(degree_) : 2.0 + eps_;
}

double CircleMap::operator()(double y) const noexcept {
  if (kind_ == MapKind::kLinear) return wrap01(static_cast<double>(degree_) * y);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return wrap01(2.0 * y + eps_ / two_pi * std::sin(two_pi * y));
}

double CircleMap::derivative(double y) const noexcept {
  if (kind_ == MapKind::kLinear) return static_cast<double>(degree_);
  return 2.0 + eps_ * std::cos(2.0 * std::numbers::pi * y);
}

std::string CircleMap::describe() const {
  std::ostringstream os;
  if (kind_ == MapKind::kLinear)
    os << "linear x" << degree_;
  else
    os << "perturbed-doubling eps=" << eps_;
  return os.str();
}

// ---------------------------------------------------------------------------
// OrbitStream

namespace {

std::uint64_t bounded(Engine& eng, std::uint64_t m) {
  // rejection sampling keeps digits exactly uniform
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % m;
  for (;;) {
    std::uint64_t v = eng();
    if (v < limit) return v % m;
  }
}

}  // namespace

int OrbitStream::draw_digit() {
  if (!prefix_.empty()) {
    int d = prefix_.front();
    prefix_.pop_front();
    return d;
  }
  if (!random_tail_) return 0;
  if (binary_) {
    if (reservoir_bits_ == 0) {
      reservoir_ = eng_();
      reservoir_bits_ = 64;
    }
    int b = static_cast<int>(reservoir_ >> 63);
    reservoir_ <<= 1;
    --reservoir_bits_;
    return b;
  }
  return static_cast<int>(bounded(eng_, static_cast<std::uint64_t>(map_.degree())));
}

void OrbitStream::fill_guard() {
  if (binary_) {
    window_ = 0;
    for (int i = 0; i < kGuardDigits; ++i) window_ = (window_ << 1) | static_cast<Fixed>(draw_digit());
    return;
  }
  digits_.clear();
  for (int i = 0; i < kGuardDigits; ++i) digits_.push_back(draw_digit());
}

void OrbitStream::advance_exact() {
  if (binary_) {
    window_ = (window_ << 1) | static_cast<Fixed>(draw_digit());
  } else {
    digits_.pop_front();
    digits_.push_back(draw_digit());
  }
}

OrbitStream OrbitStream::exact(const CircleMap& map, std::uint64_t seed, OrbitOptions opts) {
  if (!map.is_linear()) throw PreconditionViolation("exact orbit mode requires a linear map");
  OrbitStream s(map, OrbitMode::kExactDigits, opts);
  s.binary_ = map.degree() == 2;
  s.random_tail_ = true;
  s.eng_.seed(seed);
  s.fill_guard();
  return s;
}

OrbitStream OrbitStream::exact_from_digits(const CircleMap& map, std::vector<int> digits,
                                           std::optional<std::uint64_t> tail_seed, OrbitOptions opts) {
  if (!map.is_linear()) throw PreconditionViolation("exact orbit mode requires a linear map");
  for (int d : digits)
    if (d < 0 || d >= map.degree()) throw PreconditionViolation("digit out of range for map degree");
  OrbitStream s(map, OrbitMode::kExactDigits, opts);
  s.binary_ = map.degree() == 2;
  s.prefix_.assign(digits.begin(), digits.end());
  s.random_tail_ = tail_seed.has_value();
  if (tail_seed) s.eng_.seed(*tail_seed);
  s.fill_guard();
  return s;
}

OrbitStream OrbitStream::exact_from_point(const CircleMap& map, double y0, OrbitOptions opts) {
  if (!map.is_linear() || map.degree() != 2)
    throw PreconditionViolation("exact_from_point supports the doubling map only");
  if (!(y0 >= 0.0 && y0 < 1.0)) throw PreconditionViolation("initial point must lie in [0,1)");
  // a double in [0,1) is a dyadic rational with at most 1074 binary digits
  std::vector<int> digits;
  long double v = y0;
  while (v != 0.0L && digits.size() < 1100) {
    v *= 2.0L;
    int d = v >= 1.0L ? 1 : 0;
    v -= d;
    digits.push_back(d);
  }
  return exact_from_digits(map, std::move(digits), std::nullopt, opts);
}

OrbitStream OrbitStream::floating(const CircleMap& map, std::uint64_t seed, OrbitOptions opts) {
  OrbitStream s(map, OrbitMode::kFloat, opts);
  Engine eng(seed);
  s.y_ = uniform01(eng);
  for (std::size_t i = 0; i < opts.burn_in; ++i) s.y_ = map(s.y_);
  return s;
}

OrbitStream OrbitStream::floating_from_point(const CircleMap& map, double y0, OrbitOptions opts) {
  if (!(y0 >= 0.0 && y0 < 1.0)) throw PreconditionViolation("initial point must lie in [0,1)");
  OrbitStream s(map, OrbitMode::kFloat, opts);
  s.y_ = y0;
  return s;
}

double OrbitStream::point() const {
  if (mode_ == OrbitMode::kFloat) return y_;
  if (binary_) return fixed_to_double(window_);
  const long double m = map_.degree();
  long double v = 0.0L;
  for (auto it = digits_.rbegin(); it != digits_.rend(); ++it) v = (v + *it) / m;
  return static_cast<double>(v);
}

Fixed OrbitStream::fixed_point() const {
  if (mode_ == OrbitMode::kExactDigits && binary_) return window_;
  if (mode_ == OrbitMode::kExactDigits) {
    const long double m = map_.degree();
    long double v = 0.0L;
    for (auto it = digits_.rbegin(); it != digits_.rend(); ++it) v = (v + *it) / m;
    long double scaled = std::ldexp(v, 64);
    if (scaled >= 18446744073709551616.0L) return std::numeric_limits<Fixed>::max();
    return static_cast<Fixed>(scaled);
  }
  return to_fixed(y_);
}

double OrbitStream::next() {
  if (mode_ == OrbitMode::kFloat)
    y_ = map_(y_);
  else
    advance_exact();
  ++steps_;
  return point();
}

std::vector<double> OrbitStream::orbit_segment(std::size_t n) {
  if (n > opts_.max_segment)
    throw ResourceLimit("orbit_segment: requested " + std::to_string(n) + " points, limit " +
                        std::to_string(opts_.max_segment));
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

void OrbitStream::skip(std::size_t n) {
  if (mode_ == OrbitMode::kExactDigits && binary_ && prefix_.empty() && random_tail_ && n >= 64) {
    // the skipped digits never influence later points: drop them wholesale
    std::uint64_t drop = n - 64;
    std::uint64_t from_res = std::min<std::uint64_t>(drop, static_cast<std::uint64_t>(reservoir_bits_));
    reservoir_ = from_res == 64 ? 0 : (reservoir_ << from_res);
    reservoir_bits_ -= static_cast<int>(from_res);
    drop -= from_res;
    eng_.discard(drop / 64);
    for (std::uint64_t i = 0; i < drop % 64; ++i) draw_digit();
    fill_guard();
    steps_ += n;
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (mode_ == OrbitMode::kFloat)
      y_ = map_(y_);
    else
      advance_exact();
  }
  steps_ += n;
}

// ---------------------------------------------------------------------------
// Recurrence

std::optional<int> detect_period(const CircleMap& map, double x, int q_max, double tol) {
  if (q_max < 1) throw PreconditionViolation("detect_period: q_max must be >= 1");
  if (!(tol > 0.0)) throw PreconditionViolation("detect_period: tol must be > 0");
  double y = wrap01(x);
  for (int q = 1; q <= q_max; ++q) {
    y = map(y);
    if (circle_distance(y, x) <= tol) return q;
  }
  return std::nullopt;
}

std::optional<ReturnWitness> ball_return(const CircleMap& map, double x, double rho, int k,
                                         std::size_t cover_budget) {
  if (!(rho > 0.0) || k < 1) throw PreconditionViolation("ball_return: need rho > 0 and k >= 1");
  if (map.is_linear()) {
    const long double m = map.degree();
    const long double mk = std::pow(m, static_cast<long double>(k));
    // the image of the open arc B(x,rho) under f^k is the open arc of radius
    // m^k rho around f^k x (or the whole circle)
    long double z = x;
    for (int i = 0; i < k; ++i) {
      z *= m;
      z -= std::floor(z);
    }
    long double e = static_cast<long double>(x) - z;
    e -= std::floor(e);
    if (e >= 0.5L) e -= 1.0L;
    const long double reach = (mk + 1.0L) * static_cast<long double>(rho);
    if (reach <= 0.5L && std::fabs(e) >= reach) return std::nullopt;
    // u = e / (m^k + 1) satisfies |u| < rho and |m^k u - e| < rho
    long double u = e / (mk + 1.0L);
    return ReturnWitness{rho, k, wrap01(static_cast<double>(static_cast<long double>(x) + u)), true};
  }

  const double lam_k = std::pow(map.max_expansion(), k);
  const double count_d = std::ceil(2.0 * lam_k);
  if (count_d > static_cast<double>(cover_budget))
    throw ResourceLimit("ball_return: cover of " + std::to_string(count_d) + " points exceeds budget");
  const auto count = static_cast<std::size_t>(count_d);
  const double h = 2.0 * rho / static_cast<double>(count);
  // each test point covers [y - h/2, y + h/2], whose image stays within
  // Lambda^k h / 2 of the image point; float error is added to the padding
  const double pad = lam_k * h / 2.0 + lam_k * 1e-15 * k;
  std::optional<ReturnWitness> possible;
  for (std::size_t i = 0; i < count; ++i) {
    double y = wrap01(x - rho + (static_cast<double>(i) + 0.5) * h);
    double z = y;
    for (int j = 0; j < k; ++j) z = map(z);
    double d = circle_distance(z, x);
    if (d < rho && circle_distance(y, x) < rho) return ReturnWitness{rho, k, y, true};
    if (d < rho + pad && !possible) possible = ReturnWitness{rho, k, y, false};
  }
  return possible;
}

std::optional<int> first_return(const CircleMap& map, double x, double rho, int k_max) {
  for (int k = 1; k <= k_max; ++k)
    if (ball_return(map, x, rho, k)) return k;
  return std::nullopt;
}

DiophantineReport diophantine_check(const CircleMap& map, double x, double rho_min, double eps,
                                    double rho0, std::size_t cover_budget) {
  if (!(rho_min > 0.0 && rho_min <= rho0 && rho0 < 0.5))
    throw PreconditionViolation("diophantine_check: need 0 < rho_min <= rho0 < 1/2");
  if (!(eps > 0.0)) throw PreconditionViolation("diophantine_check: eps must be > 0");

  DiophantineReport rep;
  rep.exact = map.is_linear();
  if (!map.is_linear()) {
    // total cover size over the whole grid, checked up front
    double total = 0.0;
    for (double rho = rho0; rho >= rho_min; rho /= 2.0) {
      int kmax = static_cast<int>(std::floor(eps * std::fabs(std::log(rho))));
      for (int k = 1; k <= kmax; ++k) total += std::ceil(2.0 * std::pow(map.max_expansion(), k));
    }
    if (total > static_cast<double>(cover_budget))
      throw ResourceLimit("diophantine_check: cover size " + std::to_string(total) + " exceeds budget");
  }
  for (double rho = rho0; rho >= rho_min; rho /= 2.0) {
    rep.rho_grid.push_back(rho);
    int kmax = static_cast<int>(std::floor(eps * std::fabs(std::log(rho))));
    for (int k = 1; k <= kmax; ++k) {
      ++rep.pairs_tested;
      if (auto w = ball_return(map, x, rho, k, cover_budget)) rep.witnesses.push_back(*w);
    }
  }
  rep.is_diophantine = rep.witnesses.empty();
  return rep;
}

}  // namespace heavysum
