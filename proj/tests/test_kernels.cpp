#include <doctest.h>

#include <cmath>
#include <random>

#include "nlmin/errors.hpp"
#include "nlmin/kernels.hpp"

using namespace nlmin;

namespace {

RadialKernel from_fn(std::function<double(double)> f, std::function<double(double)> d2 = {}) {
  RadialKernel::Spec s;
  s.name = "test";
  s.eval = std::move(f);
  s.d2 = std::move(d2);
  s.regularity = s.d2 ? Regularity::C2 : Regularity::C0;
  return RadialKernel(std::move(s));
}

}  // namespace

TEST_CASE("power law values") {
  const PowerLawMinusKernel a(5, 2.5), b(6, 2);
  CHECK(a.eval(0.0) == 0.0);
  CHECK(a.eval(1.0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(b.eval(2.0) == doctest::Approx(64.0 / 6.0 - 2.0).epsilon(1e-14));
  CHECK(b.d2(1.0) == doctest::Approx(4.0));
  CHECK(PowerLawMinusKernel(6, 2).regularity() == Regularity::C2);
  CHECK(PowerLawMinusKernel(3, 1.5).regularity() == Regularity::C1);
  CHECK_THROWS_AS(PowerLawMinusKernel(2, 3), InvalidArgument);
}

TEST_CASE("power law derivatives against finite differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> T(0.1, 5.0), A(2.5, 8.0);
  for (int i = 0; i < 100; ++i) {
    const double alpha = A(rng), beta = 2.0 + 0.4 * (alpha - 2.0) * (i % 2);
    const PowerLawMinusKernel k(alpha, beta);
    const double t = T(rng), h = 1e-5 * t;
    const double fd1 = (k.eval(t + h) - k.eval(t - h)) / (2 * h);
    const double fd2 = (k.d1(t + h) - k.d1(t - h)) / (2 * h);
    CHECK(std::abs(k.d1(t) - fd1) <= 1e-6 * std::max(1.0, std::abs(fd1)));
    CHECK(std::abs(k.d2(t) - fd2) <= 1e-6 * std::max(1.0, std::abs(fd2)));
  }
}

TEST_CASE("definitively non-decreasing") {
  const auto r = check_definitively_nondecreasing(PowerLawMinusKernel(6, 2), 10.0, 10001);
  REQUIRE(r);
  CHECK(*r <= 1.0);
  CHECK_FALSE(check_definitively_nondecreasing(from_fn([](double t) { return -t; }), 10.0, 1001));

  // Brute-force oracle: last sample at which the sequence decreases.
  auto f = [](double t) { return std::sin(t) + t / 2; };
  const int n = 20001;
  const auto got = check_definitively_nondecreasing(from_fn(f), 20.0, n);
  REQUIRE(got);
  double oracle = 0.0;
  for (int i = 1; i < n; ++i) {
    const double t0 = 20.0 * (i - 1) / (n - 1), t1 = 20.0 * i / (n - 1);
    if (f(t1) < f(t0)) oracle = t1;
  }
  CHECK(*got == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(*got < 20.0);
}

TEST_CASE("weak repulsivity") {
  const auto p = check_weak_repulsivity(PowerLawMinusKernel(6, 2), 10.0);
  CHECK(p.g0_is_zero);
  CHECK(p.negative_near_origin);
  CHECK(p.positive_at_range);
  const auto q = check_weak_repulsivity(from_fn([](double t) { return t * t; }), 10.0);
  CHECK(q.g0_is_zero);
  CHECK_FALSE(q.negative_near_origin);
  CHECK_FALSE(check_weak_repulsivity(from_fn([](double t) { return t * t - 1; }), 10.0).g0_is_zero);
}

TEST_CASE("confinement hypotheses") {
  const ConfinementHypotheses hyp(1.0 / 100, 1.0 / 150);
  const auto bump = check_confinement_hypotheses(bump_kernel(), hyp);
  CHECK(bump.pass);
  CHECK(bump.sampled_min == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(bump.sampled_argmin == doctest::Approx(1.0).epsilon(1e-9));

  const RadialKernel wide = PowerLawMinusKernel(6, 2).kernel().scaled(3.0);
  CHECK_FALSE(check_confinement_hypotheses(wide, hyp).pass);
  CHECK_FALSE(check_confinement_hypotheses(from_fn([](double t) { return t * t; }), hyp).pass);
  CHECK_THROWS_AS(ConfinementHypotheses(0.1, 1.0 / 150), InvalidArgument);
}

TEST_CASE("confinement check is monotone in eta and xi") {
  const RadialKernel k = bump_kernel();
  for (double eta : {0.01, 0.012, 0.015})
    for (double xi : {1.0 / 150, 1.0 / 140, 1.0 / 125}) CHECK(check_confinement_hypotheses(k, {eta, xi}).pass);
}

TEST_CASE("second derivative ratio") {
  const auto bump = check_second_derivative_ratio(bump_kernel(), 1.0 / 150);
  CHECK(bump.pass);
  CHECK(bump.margin > 0.0);

  // Brute-force (t, s) scan of g''(t) + 3.5 g''(s) over the same neighbourhoods.
  const RadialKernel k = bump_kernel();
  const double xi = 1.0 / 150;
  double worst = 1e300;
  for (int i = 0; i <= 200; ++i) {
    const double t = 5 * xi * (i + 0.25) / 201.0;
    for (int j = 0; j <= 200; ++j) {
      const double s = 1.0 - 6 * xi + 12 * xi * (j + 0.25) / 201.0;
      worst = std::min(worst, k.d2(t) + 3.5 * k.d2(s));
    }
  }
  CHECK(worst > 0.0);

  const auto bad = from_fn([](double t) { return t < 0.5 ? -t * t / 2 : 0.0; },
                           [](double t) { return t < 0.5 ? -1.0 : 0.0; });
  CHECK_FALSE(check_second_derivative_ratio(bad, 1.0 / 150, 200).pass);
  const auto good = from_fn([](double t) { return t < 0.5 ? 0.0 : 0.5 * (t - 1) * (t - 1); },
                            [](double t) { return t < 0.5 ? 0.0 : 1.0; });
  CHECK(check_second_derivative_ratio(good, 1.0 / 150, 200).pass);
}

TEST_CASE("tabulated kernel reproduces its nodes") {
  std::vector<double> t, g;
  const PowerLawMinusKernel k(6, 2);
  for (int i = 0; i <= 400; ++i) t.push_back(0.01 * i), g.push_back(k.eval(0.01 * i));
  const RadialKernel tab = tabulated_kernel(t, g);
  for (int i = 0; i <= 400; i += 7) CHECK(tab(t[i]) == doctest::Approx(g[i]).epsilon(1e-12));
  CHECK(tab(1.005) == doctest::Approx(k.eval(1.005)).epsilon(1e-6));
  CHECK_THROWS_AS(kernel_eval(tab, -1.0), InvalidArgument);
}
