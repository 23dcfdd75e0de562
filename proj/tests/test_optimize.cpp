#include <doctest.h>

#include <cmath>
#include <cstring>

#include "nlmin/energy.hpp"
#include "nlmin/errors.hpp"
#include "nlmin/geometry.hpp"
#include "nlmin/optimize.hpp"

using namespace nlmin;

namespace {

const RadialKernel g62 = PowerLawMinusKernel(6, 2).kernel();
const RadialKernel g32 = PowerLawMinusKernel(3, 2).kernel();

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("measure descent recovers the triangle") {
  OptimizeOptions o;
  const MeasureResult r = minimize_measure(g62, 2, 60, o);
  CHECK(r.trace.non_increasing());
  const ClusterReport c = cluster_support(r.measure.points(), r.measure.weights(), 0.05);
  REQUIRE(c.clusters.size() == 3);
  for (const auto& cl : c.clusters) CHECK(cl.mass == doctest::Approx(1.0 / 3).epsilon(1e-6));
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) CHECK(std::abs(c.pairwise_center_distances(i, j) - 1.0) <= 5e-3);
  CHECK(energy_discrete(r.measure, g62) == doctest::Approx(-2.0 / 9).epsilon(1e-4));
  CHECK(classify_minimizer(r.measure).shape == "simplex");
}

TEST_CASE("perturbed simplex is a local minimum") {
  for (int N : {1, 2, 3}) {
    CAPTURE(N);
    const MeasureResult r = minimize_measure(g62, N, N + 1, OptimizeOptions{}, perturbed_simplex(N, 0.05, 3));
    const ClusterReport c = cluster_support(r.measure.points(), r.measure.weights(), 0.05);
    REQUIRE(static_cast<int>(c.clusters.size()) == N + 1);
    CHECK(align_to_simplex(c, build_simplex(N)) < 1e-6);
  }
}

TEST_CASE("measure descent is deterministic") {
  OptimizeOptions o;
  o.seed = 5;
  const MeasureResult a = minimize_measure(g32, 2, 40, o), b = minimize_measure(g32, 2, 40, o);
  CHECK(bit_equal(a.measure.points(), b.measure.points()));
  CHECK(bit_equal(a.measure.weights(), b.measure.weights()));
  CHECK(a.trace.energies == b.trace.energies);
}

TEST_CASE("weight polish and merge never increase energy") {
  OptimizeOptions o;
  o.max_iters = 50;
  o.weight_polish = false;
  const MeasureResult r = minimize_measure(g62, 2, 30, o);
  const double e0 = energy_discrete(r.measure, g62);
  const DiscreteMeasure p = polish_weights(r.measure, g62);
  CHECK(energy_discrete(p, g62) <= e0 + 1e-15);
  CHECK(p.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  const DiscreteMeasure m = merge_close_atoms(p, g62, 1e-2);
  CHECK(energy_discrete(m, g62) <= energy_discrete(p, g62) + 1e-14);
}

TEST_CASE("two equal masses in one dimension") {
  const MeasureResult r = minimize_measure(PowerLawMinusKernel(4, 2), 1, 20, OptimizeOptions{});
  const ClusterReport c = cluster_support(r.measure.points(), r.measure.weights(), 0.05);
  REQUIRE(c.clusters.size() == 2);
  CHECK(std::abs(c.pairwise_center_distances(0, 1) - 1.0) <= 5e-3);
  CHECK(c.clusters[0].mass == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("density solver") {
  const GridSpec tiny = GridSpec::cube(2, -0.1, 0.1, 0.05);
  const DensityResult full = minimize_density(g62, tiny.volume(), tiny, OptimizeOptions::for_density(tiny.volume()));
  for (double v : full.density.values()) CHECK(v == 1.0);
  CHECK(full.trace.iterations <= 1);
  CHECK_THROWS_AS(minimize_density(g62, 2 * tiny.volume(), tiny, OptimizeOptions::for_density(1.0)), InfeasibleMass);

  const double m = 0.05;
  const OptimizeOptions o = OptimizeOptions::for_density(m);
  const DensityResult r = minimize_density(g62, m, GridSpec::cube(2, -1.0, 1.0, 0.04), o);
  CHECK(r.trace.non_increasing());
  CHECK(r.density.mass() == doctest::Approx(m).epsilon(1e-12));
  for (double v : r.density.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(el_residual_density(r.density, g62).max_violation() <= 10 * o.grad_tol);
  CHECK(density_components(r.density).size() == 3);
}

TEST_CASE("radial solver") {
  const double m = 0.1;
  const OptimizeOptions o = OptimizeOptions::for_density(m);
  const RadialResult r = minimize_radial(g32, 2, m, 1.2, 512, o);
  CHECK(r.trace.non_increasing());
  CHECK(r.profile.mass() == doctest::Approx(m).epsilon(1e-12));
  CHECK(classify_minimizer(r.profile).shape == "annulus");

  // Restart from an annulus of the right mass near the optimum.
  const double dr = 1.2 / 512, a = 0.57;
  const double b = std::sqrt(a * a + m / M_PI);
  std::vector<double> init(512, 0.0);
  for (int k = 0; k < 512; ++k)
    if ((k + 0.5) * dr > a && (k + 0.5) * dr < b) init[k] = 1.0;
  const RadialProfile p0(2, dr, init);
  const Eigen::MatrixXd G = radial_kernel_matrix(g32, 2, dr, 512);
  const RadialResult s = minimize_radial(g32, 2, m, 1.2, 512, o, p0);
  CHECK(energy_radial(s.profile, G) <= energy_radial(RadialProfile(2, dr, project_box_mass_weighted(init, p0.shell_weights(), m)), G));
  CHECK(el_residual_radial(s.profile, G).max_violation() <= 10 * o.grad_tol);
}

TEST_CASE("mass sweep") {
  CHECK(mass_sweep(g62, {}, GridSpec::cube(2, -1, 1, 0.05), OptimizeOptions::for_density(0.05)).empty());
  const auto rows = mass_sweep(g62, {0.02, 0.1}, GridSpec::cube(2, -1.0, 1.0, 0.04), OptimizeOptions::for_density(0.02));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].hausdorff_to_scaled_support <= rows[1].hausdorff_to_scaled_support);
  CHECK(rows[0].energy < 0.0);
}

TEST_CASE("classification") {
  const Classification s = classify_minimizer(simplex_measure(2));
  CHECK(s.shape == "simplex");
  CHECK(s.diagnostics.at("residual") < 1e-12);

  PointSet circle(2, 500);
  for (int i = 0; i < 500; ++i) circle.col(i) << 0.589 * std::cos(2 * M_PI * i / 500), 0.589 * std::sin(2 * M_PI * i / 500);
  CHECK(classify_minimizer(DiscreteMeasure::uniform(circle)).shape == "sphere");

  std::vector<double> ball(100, 0.0);
  for (int k = 0; k < 60; ++k) ball[k] = 1.0;
  CHECK(classify_minimizer(RadialProfile(2, 0.01, ball)).shape == "ball");
}

TEST_CASE("option validation") {
  OptimizeOptions o;
  o.max_iters = 0;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
  o = OptimizeOptions{};
  o.backtrack = 1.5;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
}
