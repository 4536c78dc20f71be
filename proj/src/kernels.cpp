#include "heavysum/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "heavysum/binary_shift.hpp"
#include "heavysum/circle_map.hpp"
#include "heavysum/errors.hpp"
#include "heavysum/rng.hpp"

namespace heavysum {

double LadderJob::value(Fixed d) const {
  double dd = static_cast<double>(std::max<Fixed>(d, 1)) * kFixedUnit;
  if (s == 0.5) return a / (dd * dd);
  if (s == 1.0) return a / dd;
  return a * std::pow(dd, -1.0 / s);
}

double LadderJob::distance_for(double v) const { return std::min(std::pow(a / v, s), 0.5); }

void LadderJob::validate() const {
  if (!(a > 0.0 && s > 0.0)) throw PreconditionViolation("ladder needs a > 0 and s > 0");
  if (k_min < 2 || k_max < k_min || k_max > 40) throw PreconditionViolation("ladder exponents out of range");
  if (!(d_floor >= 0.0 && d_floor <= 0.5)) throw PreconditionViolation("ladder d_floor must lie in [0, 1/2]");
}

namespace {

// Shared loop body: `next` yields the fixed-point orbit, `dist` the distance.
template <class Next>
LadderLog scan(const LadderJob& job, std::uint64_t seed, Next&& next) {
  LadderLog log;
  log.seed = seed;
  const Fixed floor = radius_to_fixed(job.d_floor);
  const std::uint64_t n_max = job.horizon(job.rungs() - 1);
  log.small_prefix.assign(static_cast<std::size_t>(job.rungs()), 0.0);
  int rung = 0;
  std::uint64_t next_mark = job.horizon(0);
  double small = 0.0;
  for (std::uint64_t k = 1; k <= n_max; ++k) {
    Fixed d = next();
    if (d <= floor)
      log.events.push_back({k, d});
    else if (job.small_sums)
      small += job.value(d);
    if (k == next_mark) {
      log.small_prefix[static_cast<std::size_t>(rung)] = small;
      ++rung;
      next_mark <<= 1;
    }
  }
  return log;
}

}  // namespace

std::vector<LadderLog> run_ladder(const LadderJob& job, std::size_t count, std::size_t first) {
  job.validate();
  std::vector<LadderLog> out(count);
  const Fixed xf = to_fixed(job.x);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    const std::uint64_t seed = derive_seed(job.master_seed, first + static_cast<std::size_t>(i));
    if (job.source == PointSource::kIid) {
      Engine eng(seed);
      out[static_cast<std::size_t>(i)] = scan(job, seed, [&] { return fixed_distance(eng(), xf); });
    } else {
      DoublingOrbit orbit(seed);
      out[static_cast<std::size_t>(i)] = scan(job, seed, [&] { return fixed_distance(orbit.advance(), xf); });
    }
  }
  return out;
}

LadderLog run_ladder_serial(const LadderJob& job, std::size_t seed_index) {
  job.validate();
  const std::uint64_t seed = derive_seed(job.master_seed, seed_index);
  LadderLog log;
  log.seed = seed;
  log.small_prefix.assign(static_cast<std::size_t>(job.rungs()), 0.0);
  const std::uint64_t n_max = job.horizon(job.rungs() - 1);
  const CircleMap map = CircleMap::linear(2);
  OrbitStream stream = OrbitStream::exact(map, seed);
  Engine eng(seed);
  double small = 0.0;
  int rung = 0;
  for (std::uint64_t k = 1; k <= n_max; ++k) {
    double y = job.source == PointSource::kIid ? fixed_to_double(eng()) : stream.next();
    double d = circle_distance(y, job.x);
    if (d <= job.d_floor)
      log.events.push_back({k, radius_to_fixed(d)});
    else if (job.small_sums)
      small += job.a * std::pow(d, -1.0 / job.s);
    if (k == job.horizon(rung)) {
      log.small_prefix[static_cast<std::size_t>(rung)] = small;
      ++rung;
    }
  }
  return log;
}

namespace {

void check_level(const LadderJob& job, double level) {
  // thresholds below the logging floor would silently miss terms
  if (level < job.value(radius_to_fixed(job.d_floor)) * (1.0 - 1e-12))
    throw PreconditionViolation("ladder query level below the logging floor");
}

template <class F>
void for_events(const LadderLog& log, const LadderJob& job, int rung, F&& f) {
  if (rung < 0 || rung >= job.rungs()) throw PreconditionViolation("ladder rung out of range");
  const std::uint64_t N = job.horizon(rung);
  for (const LadderEvent& e : log.events) {
    if (e.k > N) break;
    f(e.k, job.value(e.d));
  }
}

}  // namespace

std::size_t count_above(const LadderLog& log, const LadderJob& job, int rung, double threshold) {
  check_level(job, threshold);
  std::size_t n = 0;
  for_events(log, job, rung, [&](std::uint64_t, double v) { n += v > threshold ? 1 : 0; });
  return n;
}

double remainder_sum(const LadderLog& log, const LadderJob& job, int rung, double upper) {
  if (!job.small_sums) throw PreconditionViolation("remainder needs small sums");
  check_level(job, upper);
  double sum = log.small_prefix.at(static_cast<std::size_t>(rung));
  for_events(log, job, rung, [&](std::uint64_t, double v) {
    if (v < upper) sum += v;
  });
  return sum;
}

double band_total(const LadderLog& log, const LadderJob& job, int rung, double lo, double hi) {
  check_level(job, lo);
  double sum = 0.0;
  for_events(log, job, rung, [&](std::uint64_t, double v) {
    if (v > lo && v <= hi) sum += v;
  });
  return sum;
}

std::vector<std::pair<std::uint64_t, double>> macroscopic_jumps(const LadderLog& log, const LadderJob& job, int rung,
                                                                double threshold) {
  check_level(job, threshold);
  std::vector<std::pair<std::uint64_t, double>> out;
  for_events(log, job, rung, [&](std::uint64_t k, double v) {
    if (v > threshold) out.emplace_back(k, v);
  });
  return out;
}

}  // namespace heavysum
