#include "heavysum/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "heavysum/errors.hpp"
#include "json.hpp"

namespace heavysum {

// ---------------------------------------------------------------------------
// DensityEstimate

DensityEstimate::DensityEstimate(std::vector<double> values, DensityMethod method)
    : values_(std::move(values)), method_(method) {
  if (values_.empty()) throw PreconditionViolation("density needs at least one bin");
  const double w = bin_width();
  cumulative_.resize(values_.size() + 1);
  cumulative_[0] = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i]))
      throw PreconditionViolation("density values must be finite and nonnegative");
    cumulative_[i + 1] = cumulative_[i] + values_[i] * w;
  }
  if (std::fabs(cumulative_.back() - 1.0) > 1e-9)
    throw PreconditionViolation("density must integrate to 1");
}

DensityEstimate DensityEstimate::lebesgue(std::size_t bins) {
  return DensityEstimate(std::vector<double>(bins, 1.0), DensityMethod::kLebesgue);
}

double DensityEstimate::at(double y) const noexcept {
  const std::size_t n = values_.size();
  auto i = static_cast<std::size_t>(wrap01(y) * static_cast<double>(n));
  return values_[std::min(i, n - 1)];
}

double DensityEstimate::interval_mass(double lo, double hi) const noexcept {
  const std::size_t n = values_.size();
  auto F = [&](double y) {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return cumulative_.back();
    double pos = y * static_cast<double>(n);
    auto i = std::min(static_cast<std::size_t>(pos), n - 1);
    return cumulative_[i] + (pos - static_cast<double>(i)) * values_[i] / static_cast<double>(n);
  };
  return F(hi) - F(lo);
}

double DensityEstimate::arc_mass(double c, double r) const noexcept {
  if (!(r > 0.0)) return 0.0;
  if (r >= 0.5) return total_mass();
  double lo = wrap01(c - r);
  double hi = lo + 2.0 * r;
  if (hi <= 1.0) return interval_mass(lo, hi);
  return interval_mass(lo, 1.0) + interval_mass(0.0, hi - 1.0);
}

double DensityEstimate::total_mass() const noexcept { return cumulative_.back(); }

DensityEstimate DensityEstimate::coarsened(std::size_t bins) const {
  if (bins == 0 || values_.size() % bins != 0)
    throw PreconditionViolation("coarsening needs a bin count dividing the current one");
  const std::size_t g = values_.size() / bins;
  std::vector<double> out(bins, 0.0);
  for (std::size_t i = 0; i < values_.size(); ++i) out[i / g] += values_[i];
  for (double& v : out) v /= static_cast<double>(g);
  return DensityEstimate(std::move(out), method_);
}

double DensityEstimate::l1_distance(const DensityEstimate& other) const {
  if (other.bins() != bins()) throw PreconditionViolation("L1 distance needs equal bin counts");
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += std::fabs(values_[i] - other.values_[i]);
  return s * bin_width();
}

// ---------------------------------------------------------------------------
// CircleStep

namespace {

bool arc_contains(double lo, double hi, double y) {
  return lo < hi ? (y >= lo && y < hi) : (y >= lo || y < hi);
}

}  // namespace

CircleStep CircleStep::constant(double c) {
  CircleStep f;
  f.constant_ = c;
  return f;
}

CircleStep CircleStep::indicator(double lo, double hi) {
  std::pair<double, double> arc{lo, hi};
  return indicator_union(std::span<const std::pair<double, double>>(&arc, 1));
}

CircleStep CircleStep::indicator_union(std::span<const std::pair<double, double>> arcs) {
  std::vector<std::pair<double, double>> norm;
  std::vector<double> cuts;
  for (auto [lo, hi] : arcs) {
    if (hi - lo >= 1.0) return constant(1.0);
    double a = wrap01(lo), b = wrap01(hi);
    if (a == b) continue;
    norm.emplace_back(a, b);
    cuts.push_back(a);
    cuts.push_back(b);
  }
  if (norm.empty()) return constant(0.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> vals(cuts.size());
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    double end = i + 1 < cuts.size() ? cuts[i + 1] : cuts[0] + 1.0;
    double mid = wrap01(0.5 * (cuts[i] + end));
    bool in = std::any_of(norm.begin(), norm.end(), [&](auto& ab) { return arc_contains(ab.first, ab.second, mid); });
    vals[i] = in ? 1.0 : 0.0;
  }
  // drop breakpoints that are not jumps
  CircleStep f;
  const std::size_t n = cuts.size();
  for (std::size_t i = 0; i < n; ++i) {
    double prev = vals[(i + n - 1) % n];
    if (vals[i] != prev) {
      f.breaks_.push_back(cuts[i]);
      f.values_.push_back(vals[i]);
    }
  }
  if (f.breaks_.empty()) return constant(vals[0]);
  return f;
}

double CircleStep::operator()(double y) const noexcept {
  if (breaks_.empty()) return constant_;
  double w = wrap01(y);
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), w);
  if (it == breaks_.begin()) return values_.back();
  return values_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
}

double CircleStep::variation() const noexcept {
  const std::size_t n = values_.size();
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) v += std::fabs(values_[i] - values_[(i + n - 1) % n]);
  return v;
}

namespace {

template <class F>
double integrate_segments(const std::vector<double>& breaks, const std::vector<double>& values, double constant,
                          const DensityEstimate& mu, F&& g) {
  if (breaks.empty()) return g(constant) * mu.total_mass();
  double s = 0.0;
  const std::size_t n = breaks.size();
  for (std::size_t i = 0; i < n; ++i) {
    double lo = breaks[i];
    double hi = i + 1 < n ? breaks[i + 1] : breaks[0] + 1.0;
    double mass = hi <= 1.0 ? mu.interval_mass(lo, hi) : mu.interval_mass(lo, 1.0) + mu.interval_mass(0.0, hi - 1.0);
    s += g(values[i]) * mass;
  }
  return s;
}

}  // namespace

double CircleStep::l1(const DensityEstimate& mu) const {
  return integrate_segments(breaks_, values_, constant_, mu, [](double v) { return std::fabs(v); });
}

double CircleStep::mean(const DensityEstimate& mu) const {
  return integrate_segments(breaks_, values_, constant_, mu, [](double v) { return v; });
}

bool CircleStep::nonnegative() const noexcept {
  if (breaks_.empty()) return constant_ >= 0.0;
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
}

// ---------------------------------------------------------------------------
// Ulam and Birkhoff estimates

DensityEstimate ulam_density(const CircleMap& map, std::size_t bins, std::size_t max_iterations,
                             std::size_t samples_per_bin, std::uint64_t seed) {
  if (bins < 16) throw PreconditionViolation("Ulam density needs at least 16 bins");
  const double B = static_cast<double>(bins);
  // sparse rows: transitions[i] = (target bin, probability)
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(bins);
  if (map.is_linear()) {
    // the image of bin i under x m covers bins m i .. m i + m - 1 (mod bins) exactly
    const std::size_t m = static_cast<std::size_t>(map.degree());
    for (std::size_t i = 0; i < bins; ++i) {
      for (std::size_t r = 0; r < m; ++r) {
        auto j = static_cast<std::uint32_t>((m * i + r) % bins);
        auto hit = std::find_if(rows[i].begin(), rows[i].end(), [&](auto& e) { return e.first == j; });
        if (hit == rows[i].end())
          rows[i].emplace_back(j, 1.0 / static_cast<double>(m));
        else
          hit->second += 1.0 / static_cast<double>(m);
      }
    }
  } else {
    if (samples_per_bin == 0) throw PreconditionViolation("Ulam density needs samples per bin");
    Engine eng = make_engine(seed);
    const double K = static_cast<double>(samples_per_bin);
    std::vector<std::uint32_t> targets(samples_per_bin);
    for (std::size_t i = 0; i < bins; ++i) {
      for (std::size_t k = 0; k < samples_per_bin; ++k) {
        double y = (static_cast<double>(i) + (static_cast<double>(k) + uniform01(eng)) / K) / B;
        auto j = static_cast<std::size_t>(map(y) * B);
        targets[k] = static_cast<std::uint32_t>(std::min(j, bins - 1));
      }
      std::sort(targets.begin(), targets.end());
      for (std::size_t k = 0; k < samples_per_bin;) {
        std::size_t e = k;
        while (e < samples_per_bin && targets[e] == targets[k]) ++e;
        rows[i].emplace_back(targets[k], static_cast<double>(e - k) / K);
        k = e;
      }
    }
  }
  std::vector<double> v(bins, 1.0), w(bins);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < bins; ++i)
      for (auto [j, p] : rows[i]) w[j] += v[i] * p;
    double mass = std::accumulate(w.begin(), w.end(), 0.0) / B;
    double diff = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
      w[i] /= mass;
      diff += std::fabs(w[i] - v[i]);
    }
    diff /= B;
    std::swap(v, w);
    if (diff <= 1e-10) {
      double total = std::accumulate(v.begin(), v.end(), 0.0) / B;
      for (double& x : v) x /= total;
      return DensityEstimate(std::move(v), DensityMethod::kUlam);
    }
  }
  throw NonConvergence("Ulam power iteration did not converge to 1e-10 in L1");
}

DensityEstimate birkhoff_density(const CircleMap& map, std::size_t bins, std::size_t steps, std::uint64_t seed,
                                 std::size_t burn_in) {
  if (bins == 0 || steps == 0) throw PreconditionViolation("Birkhoff density needs bins and steps");
  OrbitOptions opts;
  opts.burn_in = burn_in;
  OrbitStream orbit = map.is_linear() ? OrbitStream::exact(map, seed, opts) : OrbitStream::floating(map, seed, opts);
  std::vector<std::uint64_t> counts(bins, 0);
  const double B = static_cast<double>(bins);
  for (std::size_t k = 0; k < steps; ++k) {
    auto j = static_cast<std::size_t>(orbit.next() * B);
    ++counts[std::min(j, bins - 1)];
  }
  std::vector<double> v(bins);
  for (std::size_t i = 0; i < bins; ++i) v[i] = static_cast<double>(counts[i]) * B / static_cast<double>(steps);
  double total = std::accumulate(v.begin(), v.end(), 0.0) / B;
  for (double& x : v) x /= total;
  return DensityEstimate(std::move(v), DensityMethod::kBirkhoff);
}

// ---------------------------------------------------------------------------
// Sampling under mu

MuSampler::MuSampler(const CircleMap& map, int max_lag, std::uint64_t seed)
    : map_(map), max_lag_(max_lag), eng_(seed) {
  if (max_lag < 0) throw PreconditionViolation("sampler lag must be nonnegative");
  if (map.is_linear() && map.degree() == 2) {
    words_.resize(static_cast<std::size_t>(max_lag) / 64 + 2);
  } else if (map.is_linear()) {
    digits_per_point_ = static_cast<int>(std::ceil(64.0 / std::log2(static_cast<double>(map.degree()))));
    digits_.resize(static_cast<std::size_t>(max_lag + digits_per_point_));
  } else {
    y_ = uniform01(eng_);
    for (int i = 0; i < 1000; ++i) y_ = map_(y_);
  }
}

void MuSampler::draw(std::span<double> images) {
  const auto n = static_cast<std::size_t>(max_lag_) + 1;
  if (images.size() < n) throw PreconditionViolation("sampler output too short");
  if (!words_.empty()) {
    for (auto& w : words_) w = eng_();
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t wi = k / 64, b = k % 64;
      Fixed u = b == 0 ? words_[wi] : (words_[wi] << b) | (words_[wi + 1] >> (64 - b));
      images[k] = fixed_to_double(u);
    }
    return;
  }
  if (!digits_.empty()) {
    const auto m = static_cast<std::uint64_t>(map_.degree());
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % m;
    for (int& d : digits_) {
      std::uint64_t v;
      do v = eng_(); while (v >= limit);
      d = static_cast<int>(v % m);
    }
    const long double M = static_cast<long double>(m);
    for (std::size_t k = 0; k < n; ++k) {
      long double y = 0.0L;
      for (int i = digits_per_point_ - 1; i >= 0; --i) y = (y + digits_[k + static_cast<std::size_t>(i)]) / M;
      images[k] = static_cast<double>(y);
    }
    return;
  }
  // smooth map: decorrelate successive samples by a stride of 64 steps
  for (int i = 0; i < 64; ++i) y_ = map_(y_);
  images[0] = y_;
  double y = y_;
  for (std::size_t k = 1; k < n; ++k) images[k] = y = map_(y);
}

// ---------------------------------------------------------------------------
// Correlations

namespace {

constexpr std::size_t kBatch = std::size_t{1} << 15;

struct LagSums {
  double b = 0, bb = 0, ab = 0, aab = 0, abb = 0, aabb = 0;
};

struct BatchSums {
  double a = 0, aa = 0;
  std::size_t n = 0;
  std::vector<LagSums> lag;
};

BatchSums batch_lag_sums(const CircleMap& map, const CircleStep& psi1, const CircleStep& psi2, int max_lag,
                         std::size_t count, std::uint64_t seed) {
  BatchSums s;
  s.lag.resize(static_cast<std::size_t>(max_lag) + 1);
  MuSampler sampler(map, max_lag, seed);
  std::vector<double> img(static_cast<std::size_t>(max_lag) + 1);
  for (std::size_t i = 0; i < count; ++i) {
    sampler.draw(img);
    double a = psi1(img[0]);
    s.a += a;
    s.aa += a * a;
    for (std::size_t k = 0; k < img.size(); ++k) {
      double b = psi2(img[k]);
      LagSums& L = s.lag[k];
      L.b += b;
      L.bb += b * b;
      L.ab += a * b;
      L.aab += a * a * b;
      L.abb += a * b * b;
      L.aabb += a * a * b * b;
    }
  }
  s.n = count;
  return s;
}

// Batches run in parallel; merging in batch order keeps the result identical
// for any thread count.
BatchSums lag_sums(const CircleMap& map, const CircleStep& psi1, const CircleStep& psi2, int max_lag,
                   std::size_t samples, std::uint64_t seed) {
  const std::size_t nb = (samples + kBatch - 1) / kBatch;
  std::vector<BatchSums> parts(nb);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    auto ub = static_cast<std::size_t>(b);
    std::size_t count = std::min(kBatch, samples - ub * kBatch);
    parts[ub] = batch_lag_sums(map, psi1, psi2, max_lag, count, derive_seed(seed, ub));
  }
  BatchSums total;
  total.lag.resize(static_cast<std::size_t>(max_lag) + 1);
  for (const auto& p : parts) {
    total.a += p.a;
    total.aa += p.aa;
    total.n += p.n;
    for (std::size_t k = 0; k < total.lag.size(); ++k) {
      LagSums& T = total.lag[k];
      const LagSums& P = p.lag[k];
      T.b += P.b; T.bb += P.bb; T.ab += P.ab; T.aab += P.aab; T.abb += P.abb; T.aabb += P.aabb;
    }
  }
  return total;
}

// Covariance and its delta-method standard error from raw moment sums.
CorrelationEstimate covariance(const BatchSums& s, std::size_t k) {
  const LagSums& L = s.lag[k];
  const double n = static_cast<double>(s.n);
  const double m1 = s.a / n, m2 = L.b / n;
  const double c = L.ab / n - m1 * m2;
  // Z = (a - m1)(b - m2): expand sum Z^2 in the accumulated moments
  double z2 = L.aabb + m2 * m2 * s.aa + m1 * m1 * L.bb + n * m1 * m1 * m2 * m2 - 2 * m2 * L.aab - 2 * m1 * L.abb +
              4 * m1 * m2 * L.ab - 2 * m1 * m2 * m2 * s.a - 2 * m1 * m1 * m2 * L.b;
  double var = std::max(z2 / n - c * c, 0.0);
  return {c, std::sqrt(var / n), s.n};
}

bool is_constant(const CircleStep& f) { return f.variation() == 0.0; }

}  // namespace

CorrelationEstimate correlation(const CircleMap& map, const CircleStep& psi1, const CircleStep& psi2, int lag,
                                std::size_t samples, std::uint64_t seed) {
  if (lag < 0) throw PreconditionViolation("correlation lag must be nonnegative");
  if (samples == 0) throw InsufficientStatistics("correlation needs samples");
  if (is_constant(psi1) || is_constant(psi2)) return {0.0, 0.0, samples};
  BatchSums s = lag_sums(map, psi1, psi2, lag, samples, seed);
  return covariance(s, static_cast<std::size_t>(lag));
}

double CorrelationReport::significant(std::size_t i) const {
  return std::max(std::fabs(values[i]) - noise_sigmas * stderr_[i], 0.0);
}

double CorrelationReport::envelope(int lag) const {
  return fitted_C * bv_norm1 * l1_norm2 * std::pow(fitted_theta, lag);
}

std::string CorrelationReport::to_json() const {
  nlohmann::ordered_json j;
  j["lags"] = lags;
  j["values"] = values;
  j["stderr"] = stderr_;
  j["fitted_C"] = fitted_C;
  j["fitted_theta"] = fitted_theta;
  j["samples"] = samples;
  j["noise_sigmas"] = noise_sigmas;
  return j.dump(2);
}

void fit_envelope(CorrelationReport& r) {
  auto zero = std::find(r.lags.begin(), r.lags.end(), 0);
  if (zero == r.lags.end()) throw PreconditionViolation("envelope fit needs lag 0");
  const double scale = r.bv_norm1 * r.l1_norm2;
  const double c0 = std::fabs(r.values[static_cast<std::size_t>(zero - r.lags.begin())]);
  r.fitted_C = scale > 0.0 ? c0 / scale : 0.0;
  r.fitted_theta = 0.0;
  if (r.fitted_C <= 0.0) return;
  for (std::size_t i = 0; i < r.lags.size(); ++i) {
    if (r.lags[i] <= 0) continue;
    double a = r.significant(i);
    if (a <= 0.0) continue;
    r.fitted_theta = std::max(r.fitted_theta, std::pow(a / (r.fitted_C * scale), 1.0 / r.lags[i]));
  }
}

CorrelationReport correlation_lags(const CircleMap& map, const CircleStep& psi1, const CircleStep& psi2,
                                   int max_lag, std::size_t samples, std::uint64_t seed, const DensityEstimate& mu) {
  if (max_lag < 0) throw PreconditionViolation("correlation lag must be nonnegative");
  if (samples < 2) throw InsufficientStatistics("correlation needs samples");
  CorrelationReport r;
  r.samples = samples;
  r.bv_norm1 = psi1.bv_norm(mu);
  r.l1_norm2 = psi2.l1(mu);
  bool trivial = is_constant(psi1) || is_constant(psi2);
  BatchSums s;
  if (!trivial) s = lag_sums(map, psi1, psi2, max_lag, samples, seed);
  for (int k = 0; k <= max_lag; ++k) {
    CorrelationEstimate e = trivial ? CorrelationEstimate{0.0, 0.0, samples} : covariance(s, static_cast<std::size_t>(k));
    r.lags.push_back(k);
    r.values.push_back(e.value);
    r.stderr_.push_back(e.stderr_);
  }
  fit_envelope(r);
  return r;
}

// ---------------------------------------------------------------------------
// Multiple correlations

namespace {

struct ProductSums {
  std::size_t n = 0;
  double p = 0, pp = 0;
  std::vector<double> f, pf;  // sum phi_j, sum P phi_j
  std::vector<double> ff;     // sum phi_i phi_j (q x q)
};

}  // namespace

MultipleCorrelation multiple_correlation(const CircleMap& map, std::span<const CircleStep> phis,
                                         std::span<const int> times, std::size_t samples, std::uint64_t seed) {
  const std::size_t q = phis.size();
  if (q < 2 || times.size() != q) throw PreconditionViolation("multiple correlation needs q >= 2 functions and times");
  for (std::size_t j = 0; j < q; ++j) {
    if (times[j] < 0) throw PreconditionViolation("times must be nonnegative");
    if (j > 0 && times[j] < times[j - 1]) throw PreconditionViolation("times must be nondecreasing");
  }
  if (samples < 2) throw InsufficientStatistics("multiple correlation needs samples");
  const int max_lag = times[q - 1];
  const std::size_t nb = (samples + kBatch - 1) / kBatch;
  std::vector<ProductSums> parts(nb);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    auto ub = static_cast<std::size_t>(b);
    std::size_t count = std::min(kBatch, samples - ub * kBatch);
    ProductSums s;
    s.f.assign(q, 0.0);
    s.pf.assign(q, 0.0);
    s.ff.assign(q * q, 0.0);
    MuSampler sampler(map, max_lag, derive_seed(seed, ub));
    std::vector<double> img(static_cast<std::size_t>(max_lag) + 1), v(q);
    for (std::size_t i = 0; i < count; ++i) {
      sampler.draw(img);
      double P = 1.0;
      for (std::size_t j = 0; j < q; ++j) {
        v[j] = phis[j](img[static_cast<std::size_t>(times[j])]);
        P *= v[j];
      }
      s.p += P;
      s.pp += P * P;
      for (std::size_t j = 0; j < q; ++j) {
        s.f[j] += v[j];
        s.pf[j] += P * v[j];
        for (std::size_t l = 0; l < q; ++l) s.ff[j * q + l] += v[j] * v[l];
      }
    }
    s.n = count;
    parts[ub] = std::move(s);
  }
  ProductSums t;
  t.f.assign(q, 0.0);
  t.pf.assign(q, 0.0);
  t.ff.assign(q * q, 0.0);
  for (const auto& s : parts) {
    t.n += s.n;
    t.p += s.p;
    t.pp += s.pp;
    for (std::size_t j = 0; j < q; ++j) {
      t.f[j] += s.f[j];
      t.pf[j] += s.pf[j];
    }
    for (std::size_t k = 0; k < q * q; ++k) t.ff[k] += s.ff[k];
  }
  const double n = static_cast<double>(t.n);
  MultipleCorrelation out;
  out.samples = t.n;
  out.lhs = t.p / n;
  std::vector<double> m(q);
  out.rhs = 1.0;
  for (std::size_t j = 0; j < q; ++j) {
    m[j] = t.f[j] / n;
    out.rhs *= m[j];
  }
  out.gap = out.lhs - out.rhs;
  const double var_p = std::max(t.pp / n - out.lhs * out.lhs, 0.0);
  out.lhs_stderr = std::sqrt(var_p / n);
  // delta method: influence P - sum_j g_j phi_j with g_j = prod_{i != j} m_i
  std::vector<double> g(q, 1.0);
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t i = 0; i < q; ++i)
      if (i != j) g[j] *= m[i];
  double var = var_p;
  for (std::size_t j = 0; j < q; ++j) {
    var -= 2.0 * g[j] * (t.pf[j] / n - out.lhs * m[j]);
    for (std::size_t l = 0; l < q; ++l) var += g[j] * g[l] * (t.ff[j * q + l] / n - m[j] * m[l]);
  }
  out.gap_stderr = std::sqrt(std::max(var, 0.0) / n);
  return out;
}

MixingBracket mixing_bracket(std::span<const CircleStep> phis, std::span<const int> times, double C, double theta,
                             const MultipleCorrelation& measured, double sigmas, const DensityEstimate& mu) {
  const std::size_t q = phis.size();
  if (q < 2 || times.size() != q) throw PreconditionViolation("bracket needs q >= 2 functions and times");
  for (const auto& f : phis)
    if (!f.nonnegative()) throw PreconditionViolation("bracket needs nonnegative functions");
  MixingBracket b;
  b.lower = b.upper = phis[q - 1].l1(mu);
  for (std::size_t j = 0; j + 1 < q; ++j) {
    double l1 = phis[j].l1(mu);
    double slack = C * phis[j].bv_norm(mu) * std::pow(theta, times[j + 1] - times[j]);
    b.lower *= std::max(l1 - slack, 0.0);
    b.upper *= l1 + slack;
  }
  double tol = sigmas * measured.lhs_stderr;
  b.inside = measured.lhs + tol >= b.lower && measured.lhs - tol <= b.upper;
  return b;
}

DensityEstimate invariant_density(const CircleMap& map) {
  return map.is_linear() ? DensityEstimate::lebesgue() : ulam_density(map, 4096);
}

}  // namespace heavysum
