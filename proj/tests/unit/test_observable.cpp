#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "heavysum/density.hpp"
#include "heavysum/errors.hpp"
#include "heavysum/observable.hpp"
#include "heavysum/rng.hpp"

using namespace heavysum;
using doctest::Approx;

TEST_CASE("eval") {
  SingularObservable phi(1.0, 1.0, 0.0);
  CHECK(eval(phi, 0.25) == Approx(4.0));
  CHECK(eval(phi, 0.75) == Approx(4.0));
  CHECK(std::isinf(eval(phi, 0.0)));
  SingularObservable psi0(2.0, 0.5, 0.5);
  CHECK(eval(psi0, 0.6) == Approx(200.0));
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(SingularObservable(0.0, 1.0, 0.0), PreconditionViolation);
  CHECK_THROWS_AS(SingularObservable(1.0, -1.0, 0.0), PreconditionViolation);
  CHECK_THROWS_AS(SingularObservable(1.0, 1.0, 0.0, PsiKind::kCosine, NAN), PreconditionViolation);
}

TEST_CASE("symmetry, monotonicity and the psi bound") {
  SingularObservable phi(1.3, 0.7, 0.37);
  double prev = kInf;
  for (int i = 1; i <= 500; ++i) {
    double u = i / 1000.0;
    CHECK(phi(0.37 + u) == Approx(phi(0.37 - u)).epsilon(1e-12));
    double v = phi(0.37 + u);
    CHECK(v < prev);
    prev = v;
  }
  SingularObservable cosine(1.0, 1.5, 0.2, PsiKind::kCosine, -0.8);
  double mx = 0.0;
  for (int i = 0; i <= 1'000'000; ++i) mx = std::max(mx, std::fabs(cosine.psi(i / 1e6)));
  CHECK(std::fabs(mx - cosine.psi_bound()) < 1e-6);
  for (int i = 1; i < 1000; ++i) {
    double y = i / 1000.0;
    CHECK(cosine(y) >= cosine.singular_part(circle_distance(y, 0.2)) - cosine.psi_bound());
  }
}

TEST_CASE("fast integer powers agree with pow") {
  for (double s : {1.0, 0.5, 1.0 / 3.0, 0.25, 0.4}) {
    SingularObservable phi(1.7, s, 0.0);
    for (double d : {1e-7, 0.001, 0.3}) CHECK(phi.singular_part(d) == Approx(1.7 * std::pow(d, -1.0 / s)).epsilon(1e-13));
  }
}

TEST_CASE("thresholds") {
  auto c = thresholds(16.0, 1.0, 1.0, 1.0);
  CHECK(c.upper == Approx(16.0 * std::log(16.0)));
  CHECK(c.lower == Approx(16.0 / std::log(16.0)));
  const double N = std::ldexp(1.0, 20), L = std::log(N);
  auto d = thresholds(N, 2.0, 0.5, 3.0);
  CHECK(d.upper == Approx(1024.0 * std::sqrt(L)));
  CHECK(d.lower == Approx(1024.0 * std::pow(L, -3.0)));
  CHECK(thresholds(N, 2.0, 0.0, 1.0).upper == Approx(1024.0));
  CHECK_THROWS_AS(thresholds(2.0, 1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("truncation kinds tile the values") {
  auto up = TruncationSpec::upper_tail(10.0), lo = TruncationSpec::lower(10.0);
  for (double v : {0.1, 9.99, 10.0, 1e9}) CHECK(up.keeps(v) != lo.keeps(v));
  CHECK_THROWS_AS(TruncationSpec::band(5.0, 5.0), PreconditionViolation);
  // bands [u q^j, u q^(j+1)) for j = -3..-1 cover [u q^-3, u)
  std::vector<TruncationSpec> bands;
  for (int j = -3; j <= -1; ++j) bands.push_back(TruncationSpec::band(10.0 * std::pow(2.0, j), 10.0 * std::pow(2.0, j + 1)));
  for (double v = 1.25; v < 10.0; v += 0.01) {
    int n = 0;
    for (const auto& b : bands) n += b.keeps(v) ? 1 : 0;
    CHECK(n == 1);
  }
}

TEST_CASE("centering constant against closed forms") {
  auto leb = DensityEstimate::lebesgue();
  SingularObservable heavy(1.0, 0.5, 0.3);
  CHECK(centering_constant(heavy, TruncationSpec::none(), leb) == 0.0);
  CHECK(centering_constant(heavy, TruncationSpec::band(1.0, 2.0), leb) == 0.0);

  // a d^(-1/2) over the circle: 2 * int_0^(1/2) u^(-1/2) du = 2 sqrt 2
  SingularObservable phi(1.0, 2.0, 0.41);
  CHECK(centering_constant(phi, TruncationSpec::none(), leb) == Approx(2.0 * std::sqrt(2.0)).epsilon(1e-9));
  // psi = c cos(2 pi y) integrates to 0
  SingularObservable cosine(1.0, 2.0, 0.41, PsiKind::kCosine, 0.7);
  CHECK(centering_constant(cosine, TruncationSpec::none(), leb) == Approx(2.0 * std::sqrt(2.0)).epsilon(1e-8));
  // {l <= phi < u} is d in (1/u^2, 1/l^2]: integral 4 (1/l - 1/u)
  CHECK(centering_constant(phi, TruncationSpec::band(10.0, 100.0), leb) == Approx(4.0 * (0.1 - 0.01)).epsilon(1e-9));
  CHECK(centering_constant(phi, TruncationSpec::upper_tail(50.0), leb) == Approx(4.0 / 50.0).epsilon(1e-9));
  CHECK(centering_constant(phi, TruncationSpec::lower(50.0), leb) ==
        Approx(2.0 * std::sqrt(2.0) - 4.0 / 50.0).epsilon(1e-9));
  double prev = kInf;
  for (double l : {1e2, 1e4, 1e6, 1e8}) {
    double c = centering_constant(phi, TruncationSpec::band(l, 2 * l), leb);
    CHECK(c < prev);
    prev = c;
  }
  CHECK(prev < 1e-7);
}

TEST_CASE("centering against a two-level density") {
  DensityEstimate mu({1.5, 0.5}, DensityMethod::kUlam);
  SingularObservable phi(1.0, 2.0, 0.25);
  // y in [0, 1/2): d <= 1/4 with density 1.5; the far half has density 0.5
  double expect = 1.5 * 4.0 * 0.5 + 0.5 * 4.0 * (std::sqrt(0.5) - 0.5);
  CHECK(centering_constant(phi, TruncationSpec::none(), mu) == Approx(expect).epsilon(1e-9));
}

TEST_CASE("crossings and level sets") {
  auto leb = DensityEstimate::lebesgue();
  SingularObservable phi(1.0, 1.0, 0.1);
  for (double t : {4.0, 100.0, 1e5}) CHECK(level_set_measure(phi, t, leb) == Approx(2.0 / t));
  CHECK(level_set_measure(phi, 1.0, leb) == Approx(1.0));
  SingularObservable cosine(1.0, 1.0, 0.1, PsiKind::kCosine, 0.9);
  for (int side : {-1, 1}) {
    double d = crossing_distance(cosine, 50.0, side);
    CHECK(cosine(0.1 + side * d) == Approx(50.0).epsilon(1e-9));
  }
}

TEST_CASE("tail constant") {
  auto leb = DensityEstimate::lebesgue();
  std::vector<double> grid{100.0, 1000.0};
  auto f1 = tail_constant(SingularObservable(1.0, 1.0, 0.3), leb, grid);
  CHECK(f1.fitted == Approx(2.0));
  CHECK(f1.two_sided == Approx(2.0));
  CHECK(f1.one_sided_convention == Approx(1.0));
  auto f2 = tail_constant(SingularObservable(3.0, 0.5, 0.3), leb, grid);
  CHECK(f2.fitted == Approx(2.0 * std::sqrt(3.0)));
  auto f3 = tail_constant(SingularObservable(1.0, 1.0, 0.3, PsiKind::kCosine, 0.5), leb, std::vector<double>{1e3, 1e4});
  CHECK(f3.fitted == Approx(2.0).epsilon(2e-3));
  CHECK_THROWS_AS(tail_constant(SingularObservable(1.0, 1.0, 0.3), leb, std::vector<double>{2.0}), PreconditionViolation);
}

TEST_CASE("sampled tail constant and the spread guard") {
  Engine eng(11);
  std::vector<double> ys(1'000'000);
  for (double& y : ys) y = uniform01(eng);
  SingularObservable phi(1.0, 1.0, 0.6);
  auto fit = tail_constant_sampled(phi, ys, 1.0, std::vector<double>{10.0, 20.0});
  CHECK(std::fabs(fit.fitted - 2.0) < 4.0 * fit.stderr_[0] + 0.02);
  CHECK(fit.stderr_[0] > 0.0);
  // two t's with disagreeing counts: a wildly non-uniform sample
  std::vector<double> clumped(1000, 0.6 + 0.04);
  CHECK_THROWS_AS(tail_constant_sampled(phi, clumped, 1.0, std::vector<double>{10.0, 30.0}), FitUnstable);
}
