#include "heavysum/events.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "heavysum/binary_shift.hpp"
#include "heavysum/density.hpp"
#include "heavysum/errors.hpp"
#include "json.hpp"

namespace heavysum {

// ---------------------------------------------------------------------------
// Events and target sets

EventSpec EventSpec::exceedance(double t, double C) {
  if (!(C > 0.0)) throw PreconditionViolation("exceedance scale C must be > 0");
  EventSpec e;
  e.kind = EventKind::kExceedance;
  e.t = t;
  e.C = C;
  return e;
}

EventSpec EventSpec::window(double t, double c, double eps) {
  if (!(eps > 0.0 && eps < c)) throw PreconditionViolation("window needs 0 < eps < c");
  EventSpec e;
  e.kind = EventKind::kWindow;
  e.t = t;
  e.c = c;
  e.eps = eps;
  return e;
}

EventSpec EventSpec::tilde_window(double t, double c, double eps, int period) {
  if (period < 1) throw PreconditionViolation("tilde window needs the period of x");
  EventSpec e = window(t, c, eps);
  e.kind = EventKind::kTildeWindow;
  e.period = period;
  return e;
}

double EventSpec::rho(double N, double s) const { return normalizer(N, s, t); }

int EventSpec::p0(double N) {
  if (!(N >= 16.0)) throw PreconditionViolation("event horizon needs N >= 16");
  return static_cast<int>(std::ceil(std::log(std::log(N))));
}

void EventSpec::validate(const SingularObservable& phi, const CircleMap& map) const {
  if (kind == EventKind::kExceedance) {
    if (!(C > 0.0)) throw PreconditionViolation("exceedance scale C must be > 0");
    return;
  }
  if (!(eps > 0.0 && eps < c)) throw PreconditionViolation("window needs 0 < eps < c");
  if (period > 0) {
    double g = std::pow(map.min_expansion(), period / phi.s());
    if (!(eps < (g - 1.0) * c / (g + 1.0)))
      throw PreconditionViolation("window half-width too large for a periodic point");
  }
}

std::string EventSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case EventKind::kExceedance: os << "exceedance C=" << C; break;
    case EventKind::kWindow: os << "window c=" << c << " eps=" << eps; break;
    case EventKind::kTildeWindow: os << "tilde-window c=" << c << " eps=" << eps << " q=" << period; break;
  }
  os << " t=" << t;
  return os.str();
}

TargetSet::TargetSet(const EventSpec& spec, const SingularObservable& phi, double N)
    : phi_(&phi), spec_(spec), level_(spec.rho(N, phi.s())) {
  const double x = phi.x();
  if (spec.kind == EventKind::kExceedance) {
    lo_v_ = spec.C * level_;
    hi_v_ = kInf;
    strict_lo_ = true;
  } else {
    lo_v_ = (spec.c - spec.eps) * level_;
    hi_v_ = (spec.c + spec.eps) * level_;
    strict_lo_ = false;
  }
  // per side: d in [inner, outer]
  for (int side : {-1, +1}) {
    double outer = crossing_distance(phi, lo_v_, side);
    double inner = std::isinf(hi_v_) ? 0.0 : crossing_distance(phi, std::nextafter(hi_v_, kInf), side);
    if (!(outer > inner)) continue;
    if (side < 0)
      arcs_.push_back({wrap01(x - outer), outer - inner});
    else
      arcs_.push_back({wrap01(x + inner), outer - inner});
  }
  if (arcs_.size() == 2 && arcs_[0].length + arcs_[1].length >= 1.0) arcs_ = {{0.0, 1.0}};
  if (phi.psi_kind() == PsiKind::kZero) {
    distance_form_ = true;
    double outer = std::min(phi.distance_at(lo_v_), 0.5);
    double inner = std::isinf(hi_v_) ? 0.0 : phi.distance_at(hi_v_);
    d_lo_ = std::isinf(hi_v_) ? 0 : radius_to_fixed(inner);
    d_hi_ = radius_to_fixed(outer);
  }
}

bool TargetSet::contains(double y) const noexcept {
  double v = (*phi_)(y);
  bool above = strict_lo_ ? v > lo_v_ : v >= lo_v_;
  return above && v <= hi_v_;
}

double TargetSet::measure(const DensityEstimate& mu) const {
  double m = 0.0;
  for (const Arc& a : arcs_) {
    double hi = a.lo + a.length;
    m += hi <= 1.0 ? mu.interval_mass(a.lo, hi) : mu.interval_mass(a.lo, 1.0) + mu.interval_mass(0.0, hi - 1.0);
  }
  return m;
}

double TargetSet::lebesgue_measure() const noexcept {
  double m = 0.0;
  for (const Arc& a : arcs_) m += a.length;
  return m;
}

bool event_indicator(const EventSpec& spec, const SingularObservable& phi, double N, double y, const CircleMap& map) {
  const int p0 = EventSpec::p0(N);
  TargetSet target(spec, phi, N);
  if (spec.kind != EventKind::kTildeWindow) return target.contains(y);
  double z = y;
  for (int i = 0; i < p0; ++i) {
    if (target.contains(z)) return false;
    z = map(z);
  }
  return target.contains(z);
}

// ---------------------------------------------------------------------------
// Hit extraction

std::string HitRecord::to_csv(std::uint64_t seed) const {
  std::ostringstream os;
  os.precision(17);
  os << "seed,k,value\n";
  for (std::size_t i = 0; i < times.size(); ++i) os << seed << ',' << times[i] << ',' << values[i] << '\n';
  return os.str();
}

HitRecord hits(const EventSpec& spec, const SingularObservable& phi, OrbitStream& stream, std::size_t N) {
  if (stream.step_count() != 0) throw PreconditionViolation("hit extraction needs a fresh stream");
  const int p0 = EventSpec::p0(static_cast<double>(N));
  TargetSet target(spec, phi, static_cast<double>(N));
  HitRecord rec;
  rec.N = N;
  if (spec.kind != EventKind::kTildeWindow) {
    for (std::size_t k = 1; k <= N; ++k) {
      double y = stream.next();
      if (target.contains(y)) {
        rec.times.push_back(k);
        rec.values.push_back(phi(y));
      }
    }
    return rec;
  }
  // tilde: k is a hit iff f^k y .. f^{k+p0-1} y miss and f^{k+p0} y hits
  const auto P = static_cast<std::size_t>(p0);
  std::deque<std::pair<double, bool>> window;  // points k .. k+p0
  for (std::size_t i = 0; i <= P; ++i) {
    double y = stream.next();
    window.emplace_back(y, target.contains(y));
  }
  std::size_t misses = 0;  // count of misses among the first p0 entries
  for (std::size_t i = 0; i < P; ++i) misses += window[i].second ? 0 : 1;
  for (std::size_t k = 1; k <= N; ++k) {
    if (misses == P && window[P].second) {
      rec.times.push_back(k);
      rec.values.push_back(phi(window[0].first));
    }
    if (k == N) break;
    misses -= window[0].second ? 0 : 1;
    misses += window[P].second ? 0 : 1;
    window.pop_front();
    double y = stream.next();
    window.emplace_back(y, target.contains(y));
  }
  return rec;
}

double SeparationParams::s_of(double N) const { return K * std::log(N); }

std::size_t sep_index(std::span<const std::size_t> times, double threshold) {
  std::size_t count = 0, prev = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && times[i] < times[i - 1]) throw PreconditionViolation("separation index needs sorted times");
    if (static_cast<double>(times[i] - prev) >= threshold) ++count;
    prev = times[i];
  }
  return count;
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn, z2 = z * z;
  const double center = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::string MbcEstimate::to_json() const {
  nlohmann::ordered_json j;
  j["condition"] = condition;
  j["tuple"] = tuple;
  j["estimate"] = estimate;
  j["stderr"] = stderr_;
  j["reference"] = reference;
  j["ratio"] = ratio;
  j["ci_low"] = ci_low;
  j["ci_high"] = ci_high;
  j["samples"] = samples;
  j["effective"] = effective;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Joint probabilities

namespace {

constexpr std::size_t kBatch = std::size_t{1} << 14;

double total_length(const std::vector<Arc>& arcs) {
  double m = 0.0;
  for (const Arc& a : arcs) m += a.length;
  return m;
}

// Arcs split so that none crosses 0.
std::vector<std::pair<double, double>> pieces(const std::vector<Arc>& arcs) {
  std::vector<std::pair<double, double>> out;
  for (const Arc& a : arcs) {
    double hi = a.lo + a.length;
    if (hi <= 1.0) {
      out.emplace_back(a.lo, hi);
    } else {
      out.emplace_back(a.lo, 1.0);
      out.emplace_back(0.0, hi - 1.0);
    }
  }
  return out;
}

double sample_in(const std::vector<std::pair<double, double>>& ps, double total, Engine& eng) {
  double u = uniform01(eng) * total;
  for (const auto& [lo, hi] : ps) {
    double len = hi - lo;
    if (u < len) return lo + u;
    u -= len;
  }
  return ps.back().second - 1e-300;
}

bool in_pieces(const std::vector<std::pair<double, double>>& ps, double y) {
  for (const auto& [lo, hi] : ps)
    if (y >= lo && y < hi) return true;
  return false;
}

struct WeightSums {
  double w = 0, ww = 0;
  std::size_t n = 0, nonzero = 0;
};

// One backward importance-sampling path for a linear map x m. Preimages of w
// under f^g are (w + n) / m^g, n = 0..m^g - 1; those inside the previous set
// are counted exactly and one is chosen uniformly.
double backward_weight(int m, const std::vector<std::vector<std::pair<double, double>>>& ps,
                       const std::vector<double>& len, std::span<const std::size_t> times, Engine& eng) {
  const std::size_t r = ps.size();
  if (len[r - 1] <= 0.0) return 0.0;
  double w = sample_in(ps[r - 1], len[r - 1], eng);
  double weight = len[r - 1];
  for (std::size_t j = r - 1; j-- > 0;) {
    const std::size_t g = times[j + 1] - times[j];
    if (g == 0) {
      if (!in_pieces(ps[j], w)) return 0.0;
      continue;
    }
    const double bits = static_cast<double>(g) * std::log2(static_cast<double>(m));
    if (bits > 40.0) {
      // m^g beyond exact enumeration: the preimage set equidistributes on the
      // circle up to m^-g, so a fresh uniform draw on the set is used
      if (len[j] <= 0.0) return 0.0;
      w = sample_in(ps[j], len[j], eng);
      weight *= len[j];
      continue;
    }
    const long double M = std::pow(static_cast<long double>(m), static_cast<long double>(g));
    const long double wl = w;
    std::vector<std::pair<long double, long double>> ranges;  // [first n, count)
    long double count = 0;
    for (const auto& [lo, hi] : ps[j]) {
      long double first = std::ceil(M * lo - wl);
      long double end = std::ceil(M * hi - wl);  // n < M hi - w
      first = std::max(first, 0.0L);
      end = std::min(end, M);
      if (end > first) {
        ranges.emplace_back(first, end - first);
        count += end - first;
      }
    }
    if (count <= 0) return 0.0;
    long double pick = std::floor(static_cast<long double>(uniform01(eng)) * count);
    if (pick >= count) pick = count - 1;
    long double n = 0;
    for (const auto& [first, c] : ranges) {
      if (pick < c) {
        n = first + pick;
        break;
      }
      pick -= c;
    }
    w = static_cast<double>((wl + n) / M);
    weight *= static_cast<double>(count / M);
  }
  return weight;
}

}  // namespace

JointEstimate joint_probability(const CircleMap& map, std::span<const std::vector<Arc>> sets,
                                std::span<const std::size_t> times, std::size_t samples, std::uint64_t seed) {
  const std::size_t r = sets.size();
  if (r == 0 || times.size() != r) throw PreconditionViolation("joint probability needs one time per set");
  for (std::size_t j = 1; j < r; ++j)
    if (times[j] < times[j - 1]) throw PreconditionViolation("joint probability needs sorted times");
  if (samples < 2) throw InsufficientStatistics("joint probability needs samples");
  std::vector<std::vector<std::pair<double, double>>> ps(r);
  std::vector<double> len(r);
  for (std::size_t j = 0; j < r; ++j) {
    ps[j] = pieces(sets[j]);
    len[j] = total_length(sets[j]);
  }
  const std::size_t nb = (samples + kBatch - 1) / kBatch;
  std::vector<WeightSums> parts(nb);
  const int max_lag = static_cast<int>(times[r - 1] - times[0]);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    auto ub = static_cast<std::size_t>(b);
    const std::size_t count = std::min(kBatch, samples - ub * kBatch);
    WeightSums s;
    if (map.is_linear()) {
      Engine eng = make_engine(derive_seed(seed, ub));
      for (std::size_t i = 0; i < count; ++i) {
        double w = backward_weight(map.degree(), ps, len, times, eng);
        s.w += w;
        s.ww += w * w;
        s.nonzero += w > 0.0 ? 1 : 0;
      }
    } else {
      MuSampler sampler(map, max_lag, derive_seed(seed, ub));
      std::vector<double> img(static_cast<std::size_t>(max_lag) + 1);
      for (std::size_t i = 0; i < count; ++i) {
        sampler.draw(img);
        bool all = true;
        for (std::size_t j = 0; j < r && all; ++j) all = in_pieces(ps[j], img[times[j] - times[0]]);
        double w = all ? 1.0 : 0.0;
        s.w += w;
        s.ww += w;
        s.nonzero += all ? 1 : 0;
      }
    }
    s.n = count;
    parts[ub] = s;
  }
  WeightSums t;
  for (const auto& p : parts) {
    t.w += p.w;
    t.ww += p.ww;
    t.n += p.n;
    t.nonzero += p.nonzero;
  }
  const double n = static_cast<double>(t.n);
  JointEstimate e;
  e.value = t.w / n;
  e.stderr_ = std::sqrt(std::max(t.ww / n - e.value * e.value, 0.0) / (n - 1.0));
  e.samples = t.n;
  e.nonzero = t.nonzero;
  return e;
}


MbcEstimate estimate_M1(const CircleMap& map, const SingularObservable& phi, std::span<const EventSpec> specs,
                        std::size_t N, std::span<const std::size_t> tuple, const SeparationParams& sep,
                        std::size_t samples, std::uint64_t seed) {
  const std::size_t r = specs.size();
  if (r == 0 || tuple.size() != r) throw PreconditionViolation("(M1) needs one event per tuple entry");
  if (sep_index(tuple, sep.s_of(static_cast<double>(N))) != r)
    throw PreconditionViolation("(M1) needs a fully separated tuple");
  for (const auto& e : specs)
    if (e.kind == EventKind::kTildeWindow) throw PreconditionViolation("(M1) estimator takes plain events");
  const DensityEstimate mu = invariant_density(map);
  std::vector<std::vector<Arc>> sets;
  double product = 1.0;
  for (const auto& e : specs) {
    TargetSet target(e, phi, static_cast<double>(N));
    sets.push_back(target.arcs());
    product *= target.measure(mu);
  }
  MbcEstimate out;
  out.condition = "M1";
  out.tuple.assign(tuple.begin(), tuple.end());
  out.reference = product;
  out.samples = samples;
  if (r == 1) {
    // a single event: the joint probability is sigma itself
    out.estimate = product;
    out.ratio = 1.0;
    out.ci_low = out.ci_high = 1.0;
    out.effective = samples;
    return out;
  }
  JointEstimate j = joint_probability(map, sets, tuple, samples, seed);
  if (j.nonzero < 50) throw InsufficientStatistics("(M1): fewer than 50 contributing samples");
  out.estimate = j.value;
  out.stderr_ = j.stderr_;
  out.effective = j.nonzero;
  out.ratio = product > 0.0 ? j.value / product : 0.0;
  out.ci_low = product > 0.0 ? (j.value - 1.96 * j.stderr_) / product : 0.0;
  out.ci_high = product > 0.0 ? (j.value + 1.96 * j.stderr_) / product : 0.0;
  return out;
}

GapDecay estimate_M2(const CircleMap& map, const SingularObservable& phi, const EventSpec& spec, std::size_t N,
                     int p_min, int p_max, std::size_t samples, std::uint64_t seed) {
  if (p_min < 1 || p_max < p_min) throw PreconditionViolation("(M2) needs 1 <= p_min <= p_max");
  if (spec.kind == EventKind::kTildeWindow) throw PreconditionViolation("(M2) estimator takes plain events");
  const DensityEstimate mu = invariant_density(map);
  TargetSet target(spec, phi, static_cast<double>(N));
  GapDecay out;
  out.sigma = target.measure(mu);
  out.samples = samples;
  // the target lies inside the ball around x reaching its farthest point
  double outer = 0.0;
  for (const Arc& a : target.arcs()) {
    outer = std::max(outer, circle_distance(a.lo, phi.x()));
    outer = std::max(outer, circle_distance(a.lo + a.length, phi.x()));
  }
  out.recurrence_bound = first_return(map, phi.x(), outer, p_max);
  std::vector<std::vector<Arc>> sets{target.arcs(), target.arcs()};
  for (int p = p_min; p <= p_max; ++p) {
    std::size_t tt[2] = {0, static_cast<std::size_t>(p)};
    JointEstimate j = joint_probability(map, sets, tt, samples, derive_seed(seed, static_cast<std::uint64_t>(p)));
    out.gaps.push_back(p);
    out.joint.push_back(j.value);
    out.stderr_.push_back(j.stderr_);
    out.certified_empty.push_back(!out.recurrence_bound || p < *out.recurrence_bound);
    if (j.value > 0.0 && out.sigma > 0.0)
      out.theta_hat = std::max(out.theta_hat, std::pow(j.value / out.sigma, 1.0 / p));
  }
  out.monotone_envelope = out.theta_hat < 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Orbit scans for the (M4) estimators

namespace {

// Orbit points at increasing times with cheap skipping. The doubling map in
// exact mode runs on the 64-bit window directly.
class Cursor {
 public:
  Cursor(const CircleMap& map, std::uint64_t seed, PointSource source) : source_(source), eng_(seed) {
    if (source == PointSource::kIid) return;
    if (map.is_linear() && map.degree() == 2)
      doubling_.emplace(seed);
    else
      stream_.emplace(map.is_linear() ? OrbitStream::exact(map, seed) : OrbitStream::floating(map, seed));
  }
  // Moves to time k (> current time) and returns the point.
  void seek(std::size_t k) {
    std::size_t gap = k - k_;
    if (source_ == PointSource::kIid) {
      fixed_ = eng_();
      point_ = fixed_to_double(fixed_);
    } else if (doubling_) {
      if (gap == 1)
        doubling_->advance();
      else
        doubling_->skip(gap);
      fixed_ = doubling_->point();
      point_ = fixed_to_double(fixed_);
    } else {
      if (gap > 1) stream_->skip(gap - 1);
      point_ = stream_->next();
      fixed_ = to_fixed(point_);
    }
    k_ = k;
  }
  bool exact_fixed() const { return source_ == PointSource::kIid || doubling_.has_value(); }
  Fixed fixed() const { return fixed_; }
  double point() const { return point_; }

 private:
  PointSource source_;
  Engine eng_;
  std::optional<DoublingOrbit> doubling_;
  std::optional<OrbitStream> stream_;
  std::size_t k_ = 0;
  Fixed fixed_ = 0;
  double point_ = 0.0;
};

bool in_target(const TargetSet& t, const Cursor& c, Fixed xf) {
  if (t.distance_form() && c.exact_fixed()) return t.contains_distance(fixed_distance(c.fixed(), xf));
  return t.contains(c.point());
}

// Hits of one event (plain or tilde) at times in [k_from, k_to].
class EventScanner {
 public:
  EventScanner(const EventSpec& spec, const TargetSet& target, double N)
      : target_(target), tilde_(spec.kind == EventKind::kTildeWindow), p0_(tilde_ ? EventSpec::p0(N) : 0) {}
  int lookahead() const { return p0_; }
  const TargetSet& target() const { return target_; }
  bool tilde() const { return tilde_; }

 private:
  const TargetSet& target_;
  bool tilde_;
  int p0_;
};

}  // namespace

MbcEstimate estimate_M4_star(const CircleMap& map, const SingularObservable& phi, const EventSpec& spec,
                             std::size_t N, std::size_t r, const SeparationParams& sep, std::size_t samples,
                             std::uint64_t seed) {
  if (r == 0) throw PreconditionViolation("(M4)* needs r >= 1");
  if (spec.kind == EventKind::kTildeWindow) throw PreconditionViolation("(M4)* estimator takes plain events");
  const DensityEstimate mu = invariant_density(map);
  TargetSet target(spec, phi, static_cast<double>(N));
  const double sigma = target.measure(mu);
  MbcEstimate out;
  out.condition = "M4*";
  out.samples = samples;
  out.reference = std::pow(static_cast<double>(N) * sigma, static_cast<double>(r));
  if (sigma <= 0.0) return out;
  if (static_cast<double>(samples) * std::min(1.0, out.reference) < 50.0)
    throw InsufficientStatistics("(M4)*: expected number of events below 50");
  const double gap = sep.s_of(static_cast<double>(N));
  const Fixed xf = to_fixed(phi.x());
  std::vector<unsigned char> success(samples, 0);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(samples); ++i) {
    Cursor c(map, derive_seed(seed, static_cast<std::uint64_t>(i)), PointSource::kOrbit);
    std::size_t found = 0, last = 0;
    for (std::size_t k = 1; k <= N && found < r; ++k) {
      c.seek(k);
      // greedy earliest choice is optimal for a chain of minimum gaps
      if (static_cast<double>(k - last) >= gap && in_target(target, c, xf)) {
        ++found;
        last = k;
      }
    }
    success[static_cast<std::size_t>(i)] = found == r ? 1 : 0;
  }
  std::size_t k = 0;
  for (auto s : success) k += s;
  auto [lo, hi] = wilson_interval(k, samples);
  out.estimate = static_cast<double>(k) / static_cast<double>(samples);
  out.stderr_ = std::sqrt(out.estimate * (1 - out.estimate) / static_cast<double>(samples));
  out.effective = k;
  out.ratio = out.estimate / out.reference;
  out.ci_low = lo / out.reference;
  out.ci_high = hi / out.reference;
  return out;
}

MbcEstimate estimate_M4_intervals(const CircleMap& map, const SingularObservable& phi,
                                  std::span<const EventSpec> specs, std::span<const TimeInterval> intervals,
                                  std::size_t N, double min_separation, std::size_t samples, std::uint64_t seed,
                                  PointSource source) {
  const std::size_t r = specs.size();
  if (r == 0 || intervals.size() != r) throw PreconditionViolation("(M4) needs one interval per event");
  for (std::size_t i = 0; i < r; ++i) {
    const auto& I = intervals[i];
    if (!(I.lo >= 0.0 && I.hi <= 1.0 && I.lo < I.hi)) throw PreconditionViolation("(M4) interval outside [0,1]");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& J = intervals[j];
      double d = std::max(I.lo - J.hi, J.lo - I.hi);
      if (!(d > min_separation)) throw PreconditionViolation("(M4) intervals are not separated");
    }
  }
  const double Nd = static_cast<double>(N);
  const DensityEstimate mu = source == PointSource::kIid ? DensityEstimate::lebesgue() : invariant_density(map);
  std::vector<TargetSet> targets;
  std::vector<EventScanner> scanners;
  targets.reserve(r);
  double reference = 1.0;
  for (std::size_t j = 0; j < r; ++j) {
    specs[j].validate(phi, map);
    targets.emplace_back(specs[j], phi, Nd);
    reference *= Nd * targets.back().measure(mu) * intervals[j].length();
  }
  for (std::size_t j = 0; j < r; ++j) scanners.emplace_back(specs[j], targets[j], Nd);
  // integer time ranges, visited in increasing order
  struct Range {
    std::size_t j, from, to;
  };
  std::vector<Range> ranges;
  for (std::size_t j = 0; j < r; ++j) {
    auto from = static_cast<std::size_t>(std::max(1.0, std::ceil(intervals[j].lo * Nd)));
    auto to = static_cast<std::size_t>(std::floor(intervals[j].hi * Nd));
    ranges.push_back({j, from, to});
  }
  std::sort(ranges.begin(), ranges.end(), [](const Range& a, const Range& b) { return a.from < b.from; });
  MbcEstimate out;
  out.condition = "M4-intervals";
  out.samples = samples;
  out.reference = reference;
  if (static_cast<double>(samples) * std::min(1.0, reference) < 50.0)
    throw InsufficientStatistics("(M4): expected number of events below 50");
  const Fixed xf = to_fixed(phi.x());
  std::vector<unsigned char> success(samples, 0);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(samples); ++i) {
    Cursor c(map, derive_seed(seed, static_cast<std::uint64_t>(i)), source);
    std::size_t pos = 0;
    bool all = true;
    std::deque<bool> window;
    for (const Range& R : ranges) {
      const EventScanner& sc = scanners[R.j];
      const auto P = static_cast<std::size_t>(sc.lookahead());
      bool found = false;
      window.clear();
      for (std::size_t k = std::max(R.from, pos + 1); k <= R.to + P && !found; ++k) {
        c.seek(k);
        pos = k;
        bool in = in_target(sc.target(), c, xf);
        if (!sc.tilde()) {
          found = in && k <= R.to;
          continue;
        }
        // tilde: a hit at k - P reads miss, ..., miss, hit over the last P+1 points
        window.push_back(in);
        if (window.size() > P + 1) window.pop_front();
        if (window.size() == P + 1 && in && k - P >= R.from)
          found = std::none_of(window.begin(), window.end() - 1, [](bool b) { return b; });
      }
      if (!found) {
        all = false;
        break;
      }
    }
    success[static_cast<std::size_t>(i)] = all ? 1 : 0;
  }
  std::size_t k = 0;
  for (auto s : success) k += s;
  auto [lo, hi] = wilson_interval(k, samples);
  out.estimate = static_cast<double>(k) / static_cast<double>(samples);
  out.stderr_ = std::sqrt(out.estimate * (1 - out.estimate) / static_cast<double>(samples));
  out.effective = k;
  out.ratio = out.estimate / reference;
  out.ci_low = lo / reference;
  out.ci_high = hi / reference;
  return out;
}

// ---------------------------------------------------------------------------
// Series, counts and moments

SeriesClassification classify_Sr(std::span<const double> sigma, double t, double s, int r) {
  if (r < 1) throw PreconditionViolation("S_r needs r >= 1");
  SeriesClassification c;
  c.exponent = t * s * r;
  c.verdict = c.exponent > 1.0 ? SeriesVerdict::kFinite : SeriesVerdict::kInfinite;
  double sum = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    double j = static_cast<double>(i + 1);
    sum += std::pow(std::exp2(j) * sigma[i], r);
    c.partial_sums.push_back(sum);
  }
  return c;
}

SeriesClassification classify_Sr(double a, double s, double rho0, double C, double t, int r, int terms) {
  std::vector<double> sigma;
  for (int j = 1; j <= terms; ++j) {
    double N = std::exp2(j);
    double rho = std::pow(N, 1.0 / s) * std::pow(j * std::log(2.0), t);
    sigma.push_back(2.0 * std::pow(a, s) * rho0 * std::pow(C * rho, -s));
  }
  return classify_Sr(sigma, t, s, r);
}

std::size_t count_exceedances(std::span<const double> X, double eps, double s, double alpha) {
  const double thr = eps * normalizer(static_cast<double>(X.size()), s, alpha);
  return static_cast<std::size_t>(std::count_if(X.begin(), X.end(), [thr](double v) { return v > thr; }));
}

namespace {

struct HumpWindow {
  double level, gap_lo, gap_hi;
};

HumpWindow hump_window(double N, double s, double alpha_bar, double alpha, double eps_bar, double sN) {
  if (!(alpha_bar > 0.0 && alpha_bar < alpha)) throw PreconditionViolation("two humps need 0 < alpha_bar < alpha");
  const double lg = std::log(N);
  return {eps_bar * std::pow(N, 1.0 / s) * std::pow(lg, alpha - 1.0), std::pow(lg, (alpha - alpha_bar) / 2.0),
          2.0 * sN};
}

std::vector<HumpPair> hump_pairs(std::span<const std::size_t> big, const HumpWindow& w) {
  std::vector<HumpPair> out;
  for (std::size_t i = 0; i < big.size(); ++i)
    for (std::size_t j = i + 1; j < big.size(); ++j) {
      double g = static_cast<double>(big[j] - big[i]);
      if (g > w.gap_hi) break;
      if (g >= w.gap_lo) out.push_back({big[i], big[j]});
    }
  return out;
}

}  // namespace

std::vector<HumpPair> two_humps_scan(std::span<const double> X, double s, double alpha_bar, double alpha,
                                     double eps_bar, double sN) {
  auto w = hump_window(static_cast<double>(X.size()), s, alpha_bar, alpha, eps_bar, sN);
  std::vector<std::size_t> big;
  for (std::size_t k = 0; k < X.size(); ++k)
    if (X[k] > w.level) big.push_back(k + 1);
  return hump_pairs(big, w);
}

std::vector<HumpPair> two_humps_scan(std::span<const std::pair<std::size_t, double>> terms, std::size_t N, double s,
                                     double alpha_bar, double alpha, double eps_bar, double sN) {
  auto w = hump_window(static_cast<double>(N), s, alpha_bar, alpha, eps_bar, sN);
  std::vector<std::size_t> big;
  for (auto [k, v] : terms) {
    if (k > N) break;
    if (v > w.level) big.push_back(k);
  }
  return hump_pairs(big, w);
}

double two_humps_level(double N, double s, double alpha, double eps_bar) {
  return eps_bar * std::pow(N, 1.0 / s) * std::pow(std::log(N), alpha - 1.0);
}

MomentReport moment_estimate(std::span<const double> band_totals, double N, double s, double delta, int m,
                             bool periodic_correction) {
  if (band_totals.size() < 100) throw InsufficientStatistics("moment estimate needs at least 100 samples");
  if (m < 1) throw PreconditionViolation("moment order must be >= 1");
  double norm = std::pow(N, m / s) * std::pow(std::log(N), delta * m);
  if (periodic_correction) norm *= std::pow(std::log(std::log(N)), m);
  double sum = 0.0, sq = 0.0;
  for (double b : band_totals) {
    double v = std::pow(b, m) / norm;
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(band_totals.size());
  MomentReport r;
  r.samples = band_totals.size();
  r.normalized = sum / n;
  r.stderr_ = std::sqrt(std::max(sq / n - r.normalized * r.normalized, 0.0) / (n - 1.0));
  return r;
}

void attach_variance(MomentReport& report, std::span<const double> bar_summands, double N, double s, double D) {
  if (bar_summands.size() < 2) throw InsufficientStatistics("variance needs samples");
  double mean = 0.0;
  for (double v : bar_summands) mean += v;
  mean /= static_cast<double>(bar_summands.size());
  double var = 0.0;
  for (double v : bar_summands) var += (v - mean) * (v - mean);
  report.variance = var / static_cast<double>(bar_summands.size() - 1);
  report.variance_envelope = std::pow(N, 2.0 / s - 1.0) * std::pow(std::log(N), -D * (2.0 - s));
}

}  // namespace heavysum
