#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "nlmin/errors.hpp"
#include "nlmin/measures.hpp"
#include "nlmin/quadrature.hpp"

using namespace nlmin;

namespace {

// KKT check: out = clip(in - lambda, 0, 1) for one lambda over the free cells.
double kkt_spread(const std::vector<double>& in, const std::vector<double>& out) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (out[i] > 0.0 && out[i] < 1.0) lo = std::min(lo, in[i] - out[i]), hi = std::max(hi, in[i] - out[i]);
  return hi >= lo ? hi - lo : 0.0;
}

}  // namespace

TEST_CASE("project_box_mass examples") {
  const std::vector<double> feasible{0.2, 0.5, 0.3};
  const auto same = project_box_mass(feasible, 1.0, 1.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(same[i] - feasible[i]) <= 1e-12);

  const auto full = project_box_mass(std::vector<double>(10, 2.0), 1.0, 10.0);
  for (double v : full) CHECK(v == 1.0);

  const std::vector<double> in{0.9, 0.1, 0.5};
  const auto out = project_box_mass(in, 1.0, 1.0);
  // lambda = 1/6 would drive the middle entry negative; with it clipped, lambda = 0.2.
  const double lambda = 0.2;
  CHECK(out[0] == doctest::Approx(0.9 - lambda).epsilon(1e-12));
  CHECK(out[1] == 0.0);
  CHECK(out[2] == doctest::Approx(0.5 - lambda).epsilon(1e-12));
  CHECK(std::accumulate(out.begin(), out.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kkt_spread(in, out) < 1e-10);

  CHECK_THROWS_AS(project_box_mass(in, 1.0, 4.0), InfeasibleMass);
}

TEST_CASE("project_box_mass properties") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 3.0), F(0.05, 0.95);
  for (int t = 0; t < 300; ++t) {
    const int n = 3 + t % 60;
    std::vector<double> in(n);
    for (double& v : in) v = U(rng);
    const double h = 0.01 * (1 + t % 5), m = F(rng) * n * h;
    const auto out = project_box_mass(in, h, m);
    double mass = 0;
    for (int i = 0; i < n; ++i) {
      CHECK(out[i] >= 0.0);
      CHECK(out[i] <= 1.0);
      mass += out[i] * h;
      for (int j = 0; j < n; ++j)
        if (in[i] < in[j]) CHECK(out[i] <= out[j]);
    }
    CHECK(mass == doctest::Approx(m).epsilon(1e-12));
    CHECK(kkt_spread(in, out) < 1e-9);
    const auto again = project_box_mass(out, h, m);
    for (int i = 0; i < n; ++i) CHECK(std::abs(again[i] - out[i]) < 1e-12);
  }
}

TEST_CASE("normalize_to_probability") {
  const auto p = normalize_to_probability(DiscreteMeasure(Eigen::RowVector2d(0, 1), Eigen::Vector2d(2, 2)));
  CHECK(p.weights()(0) == 0.5);
  CHECK(normalize_to_probability(DiscreteMeasure(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1))).weights()(0) == 1.0);
  const auto q = normalize_to_probability(DiscreteMeasure(Eigen::RowVector3d(0, 1, 2), Eigen::Vector3d(0.2, 0.3, 0.5)));
  CHECK(q.weights()(1) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK_THROWS_AS(normalize_to_probability(DiscreteMeasure(Eigen::RowVector2d(0, 1), Eigen::Vector2d(0, 0))), ZeroMass);
}

TEST_CASE("constructors reject non-finite input") {
  const double nan = std::numeric_limits<double>::quiet_NaN(), inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(DiscreteMeasure(Eigen::RowVector2d(0, nan), Eigen::Vector2d(1, 1)), InvalidArgument);
  CHECK_THROWS_AS(DiscreteMeasure(Eigen::RowVector2d(0, inf), Eigen::Vector2d(1, 1)), InvalidArgument);
  CHECK_THROWS_AS(DiscreteMeasure(Eigen::RowVector2d(0, 1), Eigen::Vector2d(1, -1)), InvalidArgument);
  const GridSpec g = GridSpec::cube(1, 0.0, 1.0, 0.5);
  CHECK_THROWS_AS(GridDensity(g, {0.5, nan}), InvalidArgument);
  CHECK_THROWS_AS(GridDensity(g, {0.5, 1.5}), InvalidArgument);
  CHECK_THROWS_AS(RadialProfile(2, 0.1, {inf}), InvalidArgument);
}

TEST_CASE("measure_to_density") {
  const Eigen::Vector2d lo(-1, -1), hi(1, 1);
  const double m = 0.001;
  const auto f = measure_to_density(DiscreteMeasure(Eigen::Vector2d(0.013, 0.021), Eigen::VectorXd::Ones(1)), m, lo, hi, 0.005);
  CHECK(f.mass() == doctest::Approx(m).epsilon(1e-12));
  double vmax = 0;
  for (double v : f.values()) vmax = std::max(vmax, v);
  CHECK(vmax == 1.0);

  const auto t = measure_to_density(simplex_measure(2), m, lo, hi, 0.005);
  CHECK(t.mass() == doctest::Approx(m).epsilon(1e-12));
  for (double v : t.values()) CHECK((v == 0.0 || std::abs(v - 1.0 / 3) < 1e-14));

  // Segment of 400 equal atoms crossing 4 cubes of side 0.1 equally.
  PointSet seg(2, 400);
  for (int i = 0; i < 400; ++i) seg.col(i) << -1.0 + 0.4 * (i + 0.5) / 400, -0.95;
  const auto s = measure_to_density(DiscreteMeasure::uniform(seg), 0.01, lo, hi, 0.05);
  for (double v : s.values()) CHECK((v == 0.0 || std::abs(v - 0.25) < 1e-12));
  CHECK(s.mass() == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("radial_to_grid") {
  const int n = 100;
  const double dr = 0.01;
  const auto ball = radial_to_grid(RadialProfile(2, dr, std::vector<double>(n, 1.0)), 0.005);
  CHECK(ball.mass() == doctest::Approx(M_PI).epsilon(2e-2));
  const auto zero = radial_to_grid(RadialProfile(2, dr, std::vector<double>(n, 0.0)), 0.01);
  CHECK(zero.mass() == 0.0);
  std::vector<double> ann(n, 0.0);
  for (int k = 40; k < 80; ++k) ann[k] = 1.0;
  const auto a = radial_to_grid(RadialProfile(2, dr, ann), 0.005);
  CHECK(a.mass() == doctest::Approx(M_PI * (0.8 * 0.8 - 0.4 * 0.4)).epsilon(2e-2));
  const RadialProfile p3(3, dr, std::vector<double>(n, 1.0));
  CHECK(p3.mass() == doctest::Approx(unit_ball_volume(3)).epsilon(1e-4));
}

TEST_CASE("grid geometry") {
  const GridSpec g = GridSpec::cube(2, -1.0, 1.0, 0.5);
  CHECK(g.cell_count() == 16);
  CHECK(g.cell_volume() == 0.25);
  const Eigen::VectorXd c = g.cell_center(1);
  CHECK(c(0) == -0.75);
  CHECK(c(1) == -0.25);
  CHECK(g.multi_index(5) == std::vector<int>{1, 1});
}
