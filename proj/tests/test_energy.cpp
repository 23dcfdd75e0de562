#include <doctest.h>

#include <cmath>
#include <random>

#include "nlmin/energy.hpp"
#include "nlmin/errors.hpp"
#include "nlmin/measures.hpp"
#include "nlmin/optimize.hpp"
#include "nlmin/quadrature.hpp"

using namespace nlmin;

namespace {

const RadialKernel g62 = PowerLawMinusKernel(6, 2).kernel();
const RadialKernel g32 = PowerLawMinusKernel(3, 2).kernel();

DiscreteMeasure atom(const Eigen::VectorXd& x) { return DiscreteMeasure(x, Eigen::VectorXd::Ones(1)); }

DiscreteMeasure random_measure(std::mt19937_64& rng, int N, int n) {
  std::uniform_real_distribution<double> U(-1.0, 1.0), W(0.1, 1.0);
  PointSet X(N, n);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < N; ++a) X(a, i) = U(rng);
    w(i) = W(rng);
  }
  return DiscreteMeasure(X, w);
}

}  // namespace

TEST_CASE("discrete energy examples") {
  const RadialKernel unit = g62.scaled(3.0);
  CHECK(energy_cross_discrete(atom(Eigen::Vector2d(0, 0)), atom(Eigen::Vector2d(0, 0)), g62) == 0.0);
  CHECK(energy_cross_discrete(atom(Eigen::Vector2d(0, 0)), atom(Eigen::Vector2d(1, 0)), unit) ==
        doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(energy_discrete(simplex_measure(2), unit) == doctest::Approx(-2.0 / 3).epsilon(1e-14));
  CHECK(energy_discrete(simplex_measure(2), g62) == doctest::Approx(-2.0 / 9).epsilon(1e-14));
  CHECK(energy_discrete(atom(Eigen::Vector3d(1, 2, 3)), g62) == 0.0);
  CHECK_THROWS_AS(energy_cross_discrete(atom(Eigen::Vector2d(0, 0)), atom(Eigen::Vector3d(0, 0, 0)), g62),
                  DimensionMismatch);
}

TEST_CASE("energy invariants on random measures") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.2, 1.5);
  for (int t = 0; t < 100; ++t) {
    const int N = 1 + t % 3;
    const RadialKernel& k = t % 2 ? g62 : g32;
    const DiscreteMeasure a = random_measure(rng, N, 7), b = random_measure(rng, N, 4);
    CHECK(energy_cross_discrete(a, b, k) == energy_cross_discrete(b, a, k));

    const double s1 = U(rng), s2 = U(rng);
    PointSet X(N, a.size() + b.size());
    X << a.points(), b.points();
    Eigen::VectorXd w(a.size() + b.size());
    w << s1 * a.weights(), s2 * b.weights();
    const double lhs = energy_discrete(DiscreteMeasure(X, w), k);
    const double rhs = s1 * s1 * energy_discrete(a, k) + 2 * s1 * s2 * energy_cross_discrete(a, b, k) +
                       s2 * s2 * energy_discrete(b, k);
    CHECK(std::abs(lhs - rhs) <= 1e-10);

    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(N, N)).householderQ();
    const PointSet moved = (Q * a.points()).colwise() + Eigen::VectorXd::Random(N);
    CHECK(std::abs(energy_discrete(DiscreteMeasure(moved, a.weights()), k) - energy_discrete(a, k)) <= 1e-10);

    double fubini = 0;
    for (int i = 0; i < a.size(); ++i) fubini += a.weights()(i) * potential_at(a, k, a.points().col(i));
    CHECK(std::abs(fubini - energy_discrete(a, k)) <= 1e-10);
  }
}

TEST_CASE("potential derivatives against finite differences") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double h = 1e-4;
  for (int t = 0; t < 100; ++t) {
    const int N = 1 + t % 3;
    const DiscreteMeasure mu = random_measure(rng, N, 5);
    Eigen::VectorXd x(N);
    for (int a = 0; a < N; ++a) x(a) = U(rng);
    const Eigen::VectorXd g = potential_grad(mu, g62, x);
    const Eigen::MatrixXd H = potential_hessian(mu, g62, x);
    for (int a = 0; a < N; ++a) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(N);
      e(a) = h;
      const double fd = (potential_at(mu, g62, x + e) - potential_at(mu, g62, x - e)) / (2 * h);
      CHECK(std::abs(g(a) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      const Eigen::VectorXd col = (potential_grad(mu, g62, x + e) - potential_grad(mu, g62, x - e)) / (2 * h);
      CHECK((H.col(a) - col).norm() <= 1e-5 * std::max(1.0, col.norm()));
    }
  }
}

TEST_CASE("hessian at an atom and positive direction") {
  RadialKernel::Spec s;
  s.name = "quadratic";
  s.eval = [](double t) { return t * t; };
  s.d1 = [](double t) { return 2 * t; };
  s.d2 = [](double) { return 2.0; };
  s.regularity = Regularity::C2;
  const RadialKernel q{s};
  const Eigen::MatrixXd H = potential_hessian(atom(Eigen::Vector2d(0, 0)), q, Eigen::Vector2d(0, 0));
  CHECK(H(0, 0) == doctest::Approx(2.0));
  CHECK(H(1, 1) == doctest::Approx(2.0));
  CHECK(H(0, 1) == doctest::Approx(0.0));

  const DiscreteMeasure mu = simplex_measure(2);
  const auto dir = hessian_positive_direction(mu, g62, mu.points().col(0));
  CHECK(dir.value > 0.0);
  CHECK(dir.v_best.norm() == doctest::Approx(1.0));
}

TEST_CASE("simplex hessian lower bound") {
  const DiscreteMeasure mu = simplex_measure(2);
  const Eigen::MatrixXd H = potential_hessian(mu, g62, mu.points().col(0));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> Z(0, 1);
  double lo = 1e300;
  for (int t = 0; t < 10000; ++t) {
    Eigen::Vector2d v(Z(rng), Z(rng));
    v.normalize();
    lo = std::min(lo, v.dot(H * v));
  }
  CHECK(lo >= (-1.0 + 4.0 * 0.5) / 3 - 1e-8);
  CHECK(H.selfadjointView<Eigen::Upper>().eigenvalues().minCoeff() >= 1.0 / 3 - 1e-12);
}

TEST_CASE("density energy") {
  const RadialKernel unit = g62.scaled(3.0);
  const GridSpec g(Eigen::Vector2d(-0.05, -0.05), 0.1, {1, 11});
  std::vector<double> one(11, 0.0);
  one[0] = 1.0;
  CHECK(energy_density(GridDensity(g, one), unit) == 0.0);
  one[10] = 1.0;
  const double v = g.cell_volume();
  CHECK(energy_density(GridDensity(g, one), unit) == doctest::Approx(-2 * v * v).epsilon(1e-12));

  // Brute-force double sum over cell centres.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const GridSpec r = GridSpec::cube(2, -0.5, 0.5, 0.1);
  std::vector<double> f(r.cell_count());
  for (double& x : f) x = U(rng);
  const GridDensity d(r, f);
  double oracle = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < f.size(); ++j)
      oracle += f[i] * f[j] * g62((r.cell_center(i) - r.cell_center(j)).norm());
  oracle *= r.cell_volume() * r.cell_volume();
  CHECK(energy_density(d, g62) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(energy_cross_density(d, d, g62) == doctest::Approx(oracle).epsilon(1e-12));

  const auto psi = density_potential(d, g62);
  CHECK(psi[17] == doctest::Approx(potential_at(d, g62, r.cell_center(17))).epsilon(1e-12));
}

TEST_CASE("rasterised simplex energy converges to m^2 E(mu)") {
  const Eigen::Vector2d lo(-1, -1), hi(1, 1);
  double prev = 1e300;
  for (double m : {0.01, 0.0025, 0.000625}) {
    const double target = m * m * (-2.0 / 9);
    const GridDensity f = measure_to_density(simplex_measure(2), m, lo, hi, std::sqrt(m) / 5);
    const double err = std::abs(energy_density(f, g62) - target) / std::abs(target);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.005);
}

TEST_CASE("radial reduced kernel") {
  // Trapezoid oracle for G(r, r) in the plane.
  for (double r : {0.1, 0.5, 1.3}) {
    const int n = 200000;
    double sum = 0;
    for (int i = 0; i <= n; ++i) {
      const double th = 2 * M_PI * i / n;
      sum += (i == 0 || i == n ? 0.5 : 1.0) * g32(2 * r * std::sin(th / 2));
    }
    sum /= n;
    CHECK(std::abs(radial_reduced_kernel(g32, 2, r, r) - sum) <= 1e-8);
  }
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const int N = 1 + t % 4;
    const double r = U(rng), s = U(rng);
    CHECK(std::abs(radial_reduced_kernel(g62, N, r, s) - radial_reduced_kernel(g62, N, s, r)) <= 1e-10);
    CHECK(std::abs(radial_reduced_kernel(g62, N, r, 0.0) - g62(r)) <= 1e-12);
  }
  CHECK(energy_radial(RadialProfile(2, 0.01, std::vector<double>(50, 0.0)), g32) == 0.0);

  // Radial energy of a profile matches the grid energy of its rasterisation.
  std::vector<double> ann(60, 0.0);
  for (int k = 20; k < 60; ++k) ann[k] = 1.0;
  const RadialProfile p(2, 0.01, ann);
  const double er = energy_radial(p, g32);
  const double eg = energy_density(radial_to_grid(p, 0.005), g32);
  CHECK(er == doctest::Approx(eg).epsilon(2e-2));
}

TEST_CASE("euler-lagrange residuals") {
  const DiscreteMeasure mu = simplex_measure(2);
  const ELReport r = el_residual_measure(mu, g62);
  CHECK(r.viol_support < 1e-12);
  CHECK(r.lambda_hat == doctest::Approx(-2.0 / 9).epsilon(1e-12));
  CHECK(r.n_probes > 0);

  // Ball indicator of g32: psi increases radially across the boundary.
  std::vector<double> ball(40, 0.0);
  for (int k = 0; k < 20; ++k) ball[k] = 1.0;
  const RadialProfile p(2, 0.01, ball);
  const ELReport e = el_residual_radial(p, radial_kernel_matrix(g32, 2, 0.01, 40));
  CHECK(e.viol_interior == 0.0);
  CHECK(e.n_interior == 0);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  const GridSpec g = GridSpec::cube(2, -0.5, 0.5, 0.05);
  std::vector<double> f(g.cell_count());
  for (double& x : f) x = U(rng);
  CHECK(el_residual_density(GridDensity(g, f), g62).max_violation() > 0.0);
}

TEST_CASE("diameter bound") {
  CHECK(diameter_kappa(2) == doctest::Approx(5.0 / 3).epsilon(1e-12));
  CHECK(cap_fraction(2, M_PI / 15) == doctest::Approx(1.0 / 15).epsilon(1e-12));
  CHECK(cap_fraction(3, M_PI / 2) == doctest::Approx(0.5).epsilon(1e-12));

  const DiameterBoundReport r = diameter_bound(g62, 0.05, DiameterVariant::LocallyBounded);
  CHECK(std::isfinite(r.D));
  CHECK(r.R_plus >= 50 * r.R);
  CHECK(r.D == doctest::Approx(2 * r.R_plus));
  // Regression fixture.
  CHECK(r.R == doctest::Approx(1.62889).epsilon(1e-4));
  CHECK(r.R_plus == doctest::Approx(81.4447).epsilon(1e-4));
  CHECK(r.D == doctest::Approx(162.889).epsilon(1e-4));

  const DiameterBoundReport gen = diameter_bound(g62, 0.05, DiameterVariant::General);
  CHECK(std::isfinite(gen.D));
  CHECK(gen.D >= r.D);

  RadialKernel::Spec s;
  s.name = "decreasing";
  s.eval = [](double t) { return -t; };
  CHECK_THROWS_AS(diameter_bound(RadialKernel(s), 0.05, DiameterVariant::LocallyBounded), HypothesisError);
}

TEST_CASE("quadrature") {
  const auto q = gauss_legendre(16, 0.0, 2.0);
  double s = 0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i], 9);
  CHECK(s == doctest::Approx(102.4).epsilon(1e-13));
  CHECK(unit_ball_volume(2) == doctest::Approx(M_PI));
  CHECK(unit_ball_volume(3) == doctest::Approx(4 * M_PI / 3));
}
