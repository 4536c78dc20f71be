#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "heavysum/circle_map.hpp"
#include "heavysum/density.hpp"
#include "heavysum/errors.hpp"
#include "heavysum/events.hpp"
#include "heavysum/observable.hpp"
#include "heavysum/path.hpp"

using namespace heavysum;
using doctest::Approx;

namespace {

std::vector<double> orbit_values(const SingularObservable& phi, const CircleMap& map, std::size_t N, std::uint64_t seed) {
  auto s = map.is_linear() ? OrbitStream::exact(map, seed) : OrbitStream::floating(map, seed);
  std::vector<double> X(N);
  for (auto& v : X) v = phi(s.next());
  return X;
}

}  // namespace

TEST_CASE("step path validation and evaluation") {
  CHECK_THROWS_AS(CadlagStep(0.0, {0.5, 0.4}, {1.0, 2.0}), PreconditionViolation);
  CHECK_THROWS_AS(CadlagStep(0.0, {0.0}, {1.0}), PreconditionViolation);
  CHECK_THROWS_AS(CadlagStep(0.0, {1.1}, {1.0}), PreconditionViolation);
  CHECK_THROWS_AS(CadlagStep(1.0, {0.5}, {1.0}), PreconditionViolation);
  CadlagStep h(0.0, {0.25, 1.0}, {2.0, -1.0});
  CHECK(h(0.0) == 0.0);
  CHECK(h(0.2499) == 0.0);
  CHECK(h(0.25) == 2.0);  // right-continuous
  CHECK(h(1.0) == -1.0);
  CHECK(h.sup() == 2.0);
  CHECK(h.inf() == -1.0);
  CHECK(h.jump_size(1) == -3.0);
  auto merged = CadlagStep::from_levels(1.0, std::vector<double>{0.1, 0.2, 0.3}, std::vector<double>{1.0, 3.0, 3.0});
  CHECK(merged.jump_count() == 1);
  auto csv = h.to_csv(5);
  CHECK(csv.rfind("t,value\n", 0) == 0);
}

TEST_CASE("build_WN") {
  std::vector<double> zero(64, 0.0);
  CHECK(build_WN(zero, 0.5, 1.5).jump_count() == 0);
  const double N = 64.0, norm = normalizer(N, 0.5, 1.5);
  std::vector<double> one(64, 0.0);
  one[9] = norm;
  auto w = build_WN(one, 0.5, 1.5);
  REQUIRE(w.jump_count() == 1);
  CHECK(w.jump_times()[0] == Approx(10.0 / 64.0));
  CHECK(w.jump_size(0) == Approx(1.0));
  std::vector<double> flat(64, 2.5);
  CHECK(build_WN(flat, 2.0, 0.5, 2.5).jump_count() == 0);
  CHECK_THROWS_AS(build_WN(std::vector<double>{1.0, 2.0}, 0.5, 1.5), DomainError);
}

TEST_CASE("build_WN is positively homogeneous") {
  SingularObservable phi(1.0, 0.5, 0.3478103);
  auto X = orbit_values(phi, CircleMap::linear(2), 4096, 3);
  auto w = build_WN(X, 0.5, 1.5);
  for (auto& v : X) v *= 3.0;
  auto w3 = build_WN(X, 0.5, 1.5);
  REQUIRE(w.jump_count() == w3.jump_count());
  for (std::size_t i = 0; i < w.jump_count(); ++i) CHECK(w3.levels()[i] == Approx(3.0 * w.levels()[i]));
}

TEST_CASE("trimming splits") {
  SingularObservable phi(1.0, 0.5, 0.3478103);
  auto leb = DensityEstimate::lebesgue();
  std::vector<double> small(100, 1.0), big(100, 1e30);
  auto a = split_S(small, 0.5, 0.2, phi, leb);
  CHECK(a.first.back() == 0.0);
  auto b = split_S(big, 0.5, 0.2, phi, leb);
  CHECK(b.second.back() == 0.0);
  CHECK_THROWS_AS(split_S(small, 0.5, 0.0, phi, leb), PreconditionViolation);

  auto X = orbit_values(phi, CircleMap::linear(2), 1 << 14, 8);
  auto t = trimmed_sums(X, 0.5, 1.5, 0.2, 1.0, phi, leb);
  CHECK(t.b1 == 0.0);
  CHECK(t.bar_b == 0.0);
  for (std::size_t n = 0; n < t.N; ++n) {
    CHECK(t.S[n] == Approx(t.S1[n] + t.S2[n]).epsilon(1e-12));
    CHECK(t.S2[n] == Approx(t.bar[n] + t.bbar[n]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(split_bar(X, 0.5, 0.2, 0.2, 0.1, phi, leb), PreconditionViolation);
}

TEST_CASE("centered trimming closes the bookkeeping for s > 1") {
  SingularObservable phi(1.0, 1.5, 0.3478103);
  auto leb = DensityEstimate::lebesgue();
  auto X = orbit_values(phi, CircleMap::linear(2), 1 << 12, 4);
  auto t = trimmed_sums(X, 1.5, 0.7, 0.3, 4.0, phi, leb);
  CHECK(t.b1 > 0.0);
  CHECK(t.b2 > 0.0);
  CHECK(t.b1 + t.b2 == Approx(centering_constant(phi, TruncationSpec::none(), leb)).epsilon(1e-9));
  for (std::size_t n = 0; n < t.N; ++n) {
    double k = static_cast<double>(n + 1);
    CHECK(t.S[n] == Approx(t.S1[n] + t.S2[n] + k * (t.b1 + t.b2)).epsilon(1e-12));
    CHECK(t.S2[n] == Approx(t.bar[n] + t.bbar[n] + k * (t.bar_b + t.bbar_b - t.b2)).epsilon(1e-12));
  }
  CHECK(t.to_csv().rfind("n,S,S_prime", 0) == 0);
}

TEST_CASE("validate_D and alpha windows") {
  CHECK(validate_D(1.0, 0.5, 1.5));
  CHECK_FALSE(validate_D(2.0, 1.5, 0.7));
  CHECK(validate_D(4.0, 1.5, 0.7));
  CHECK_THROWS_AS(validate_D(1.0, 2.0, 1.0), PreconditionViolation);
  auto w = alpha_window(1, 0.5);
  CHECK(w.lo == Approx(1.0));
  CHECK(w.hi == Approx(2.0));
  CHECK_FALSE(w.contains(1.0));
  CHECK(w.contains(2.0));
  auto w2 = alpha_window(2, 1.0);
  CHECK(w2.lo == Approx(1.0 / 3.0));
  CHECK(w2.hi == Approx(0.5));
  for (int r = 1; r < 10; ++r) CHECK(alpha_window(r + 1, 0.7).hi == Approx(alpha_window(r, 0.7).lo));
}

TEST_CASE("project_Hr") {
  auto h = CadlagStep::from_jumps(std::vector<double>{0.2, 0.5, 0.8}, std::vector<double>{5.0, 1.0, 3.0});
  auto p = project_Hr(h, 2);
  REQUIRE(p.jump_count() == 2);
  CHECK(p.jump_times()[0] == 0.2);
  CHECK(p.jump_times()[1] == 0.8);
  CHECK(p.terminal_value() == 8.0);
  CHECK(project_Hr(h, 0).jump_count() == 0);
  CHECK(project_Hr(h, kAllJumps, 10.0).jump_count() == 0);
  CHECK(project_Hr(p, 2) == p);
  auto tie = CadlagStep::from_jumps(std::vector<double>{0.3, 0.6}, std::vector<double>{2.0, 2.0});
  CHECK(project_Hr(tie, 1).jump_times()[0] == 0.3);
  auto neg = CadlagStep::from_jumps(std::vector<double>{0.3, 0.6}, std::vector<double>{-4.0, 1.0});
  CHECK(project_Hr(neg, 2).jump_count() == 1);
  // monotone in r
  auto big = CadlagStep::from_jumps(std::vector<double>{0.1, 0.2, 0.3, 0.4}, std::vector<double>{1, 4, 2, 3});
  for (std::size_t r = 1; r <= 4; ++r) {
    auto lo = project_Hr(big, r - 1), hi = project_Hr(big, r);
    for (double t : lo.jump_times())
      CHECK(std::find(hi.jump_times().begin(), hi.jump_times().end(), t) != hi.jump_times().end());
  }
}

TEST_CASE("exceedance count equals the jumps of the projected path") {
  SingularObservable phi(1.0, 0.5, 0.3478103);
  auto X = orbit_values(phi, CircleMap::linear(2), 1 << 14, 12);
  for (double eps : {1e-4, 1e-3, 0.01}) {
    auto w = build_WN(X, 0.5, 1.5);
    CHECK(count_exceedances(X, eps, 0.5, 1.5) == project_Hr(w, kAllJumps, eps).jump_count());
  }
}

TEST_CASE("band sums tile") {
  SingularObservable phi(1.0, 0.5, 0.3478103);
  auto X = orbit_values(phi, CircleMap::linear(2), 1 << 14, 5);
  const double N = X.size(), s = 0.5, delta = 0.25;
  const int q = 4;
  CHECK(std::ranges::all_of(band_sum(std::vector<double>(16, 1.0), s, delta, 0), [](double v) { return v == 0.0; }));
  std::vector<double> single(16, 0.0);
  const double v = std::pow(16.0, 2.0) * std::pow(std::log(16.0), 0.5 * delta);
  single[6] = v;
  auto bs = band_sum(single, s, delta, 0);
  CHECK(bs[5] == 0.0);
  CHECK(bs[6] == v);
  CHECK(bs[15] == v);
  CHECK_THROWS_AS(band_sum(X, s, delta, 1), PreconditionViolation);
  // bands j = -q..0 tile (N^(1/s) (ln N)^(-q delta), N^(1/s) (ln N)^delta]
  std::vector<double> total(X.size(), 0.0);
  for (int j = -q; j <= 0; ++j) {
    auto b = band_sum(X, s, delta, j);
    for (std::size_t i = 0; i < X.size(); ++i) total[i] += b[i];
  }
  const double lo = std::pow(N, 1 / s) * std::pow(std::log(N), -q * delta), hi = std::pow(N, 1 / s) * std::pow(std::log(N), delta);
  double direct = 0.0;
  for (double x : X)
    if (x > lo && x <= hi) direct += x;
  CHECK(total.back() == Approx(direct).epsilon(1e-12));
}

TEST_CASE("sup_remainder") {
  CHECK(sup_remainder(std::vector<double>(16, 0.0), 0.5, 1.5) == 0.0);
  std::vector<double> mono(64);
  for (std::size_t i = 0; i < mono.size(); ++i) mono[i] = static_cast<double>(i + 1);
  CHECK(sup_remainder(mono, 1.0, 1.0) == Approx(64.0 / normalizer(64.0, 1.0, 1.0)));
  CHECK_THROWS_AS(sup_remainder(std::vector<double>{1.0, 2.0}, 1.0, 1.0), DomainError);
}
