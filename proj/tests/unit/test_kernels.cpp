#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include <cmath>
#include <vector>

#include "heavysum/circle_map.hpp"
#include "heavysum/errors.hpp"
#include "heavysum/kernels.hpp"
#include "heavysum/observable.hpp"
#include "heavysum/path.hpp"

using namespace heavysum;
using doctest::Approx;

namespace {

LadderJob small_job(PointSource src) {
  LadderJob job;
  job.x = 0.3478103;
  job.s = 0.5;
  job.k_min = 10;
  job.k_max = 14;
  job.d_floor = 1e-3;
  job.small_sums = true;
  job.source = src;
  job.master_seed = 77;
  return job;
}

}  // namespace

TEST_CASE("parallel ladder agrees with the serial reference") {
  for (auto src : {PointSource::kOrbit, PointSource::kIid}) {
    auto job = small_job(src);
    auto logs = run_ladder(job, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      auto ref = run_ladder_serial(job, i);
      CHECK(logs[i].seed == ref.seed);
      REQUIRE(logs[i].events.size() == ref.events.size());
      for (std::size_t e = 0; e < ref.events.size(); ++e) {
        CHECK(logs[i].events[e].k == ref.events[e].k);
        CHECK(job.value(logs[i].events[e].d) == Approx(job.value(ref.events[e].d)).epsilon(1e-9));
      }
      for (int r = 0; r < job.rungs(); ++r)
        CHECK(logs[i].small_prefix[r] == Approx(ref.small_prefix[r]).epsilon(1e-9));
    }
  }
}

TEST_CASE("ladder output does not depend on the thread count") {
  auto job = small_job(PointSource::kOrbit);
  int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  auto a = run_ladder(job, 6);
  omp_set_num_threads(3);
  auto b = run_ladder(job, 6);
  omp_set_num_threads(saved);
  for (std::size_t i = 0; i < 6; ++i) {
    REQUIRE(a[i].events.size() == b[i].events.size());
    for (std::size_t e = 0; e < a[i].events.size(); ++e) CHECK(a[i].events[e].d == b[i].events[e].d);
    CHECK(a[i].small_prefix == b[i].small_prefix);
  }
  auto tail = run_ladder(job, 2, 4);
  CHECK(tail[0].events.size() == a[4].events.size());
}

TEST_CASE("ladder queries match direct orbit sums") {
  auto job = small_job(PointSource::kOrbit);
  auto log = run_ladder(job, 1)[0];
  SingularObservable phi(job.a, job.s, job.x);
  auto stream = OrbitStream::exact(CircleMap::linear(2), log.seed);
  std::vector<double> X(job.horizon(job.rungs() - 1));
  for (auto& v : X) v = phi(stream.next());
  const double floor_value = job.value(radius_to_fixed(job.d_floor));
  for (int r = 0; r < job.rungs(); ++r) {
    std::size_t N = job.horizon(r);
    std::span<const double> head(X.data(), N);
    double thr = 2.0 * floor_value;
    std::size_t direct = 0;
    double below = 0.0, band = 0.0;
    for (double v : head) {
      direct += v > thr ? 1 : 0;
      below += v < 3.0 * floor_value ? v : 0.0;
      band += (v > floor_value * 1.5 && v <= thr * 4) ? v : 0.0;
    }
    CHECK(count_above(log, job, r, thr) == direct);
    CHECK(remainder_sum(log, job, r, 3.0 * floor_value) == Approx(below).epsilon(1e-9));
    CHECK(band_total(log, job, r, floor_value * 1.5, thr * 4) == Approx(band).epsilon(1e-9));
    CHECK(macroscopic_jumps(log, job, r, thr).size() == direct);
    CHECK(count_exceedances(head, thr / normalizer(static_cast<double>(N), 0.5, 1.5), 0.5, 1.5) == direct);
  }
  CHECK_THROWS_AS(count_above(log, job, 0, floor_value / 2), PreconditionViolation);
  CHECK_THROWS_AS(count_above(log, job, job.rungs(), floor_value * 2), PreconditionViolation);
}

TEST_CASE("ladder job validation") {
  LadderJob job;
  job.k_min = 20;
  job.k_max = 19;
  CHECK_THROWS_AS(run_ladder(job, 1), PreconditionViolation);
  job.k_max = 21;
  job.d_floor = 0.7;
  CHECK_THROWS_AS(run_ladder(job, 1), PreconditionViolation);
  job.d_floor = 0.01;
  job.small_sums = false;
  auto log = run_ladder(job, 1)[0];
  CHECK_THROWS_AS(remainder_sum(log, job, 0, 1e9), PreconditionViolation);
  CHECK(job.distance_for(job.value(radius_to_fixed(0.01))) == Approx(0.01));
}
