#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "nlmin/energy.hpp"
#include "nlmin/errors.hpp"
#include "nlmin/io.hpp"
#include "nlmin/measures.hpp"
#include "nlmin/optimize.hpp"
#include "nlmin/parallel.hpp"

using namespace nlmin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nlmin_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const RadialKernel g62 = PowerLawMinusKernel(6, 2).kernel();

}  // namespace

TEST_CASE("measure csv round trip is bit exact") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> Z(0, 1);
  PointSet X(3, 17);
  Eigen::VectorXd w(17);
  for (int i = 0; i < 17; ++i) {
    for (int a = 0; a < 3; ++a) X(a, i) = Z(rng) * 1e-3 + Z(rng);
    w(i) = std::abs(Z(rng)) / 7;
  }
  const DiscreteMeasure mu(X, w);
  const std::string path = (scratch("csv") / "mu.csv").string();
  write_measure_csv(path, mu);
  const DiscreteMeasure back = read_measure_csv(path);
  REQUIRE(back.size() == mu.size());
  CHECK(std::memcmp(back.points().data(), X.data(), sizeof(double) * X.size()) == 0);
  CHECK(std::memcmp(back.weights().data(), w.data(), sizeof(double) * w.size()) == 0);
  CHECK(energy_discrete(back, g62) == energy_discrete(mu, g62));
}

TEST_CASE("density round trip is bit exact") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0, 1);
  const GridSpec g = GridSpec::cube(2, -0.3, 0.3, 0.03);
  std::vector<double> v(g.cell_count());
  for (double& x : v) x = U(rng);
  const GridDensity f(g, v);
  const std::string stem = (scratch("density") / "f").string();
  write_density(stem, f);
  const GridDensity back = read_density(stem);
  CHECK(back.values() == f.values());
  CHECK(back.grid().dims == g.dims);
  CHECK(back.grid().spacing == g.spacing);
  CHECK(energy_density(back, g62) == energy_density(f, g62));
}

TEST_CASE("radial round trip is bit exact") {
  std::vector<double> v(64);
  for (int k = 0; k < 64; ++k) v[k] = k % 3 == 0 ? 1.0 : 1.0 / (k + 1);
  const RadialProfile p(3, 0.0123, v);
  const std::string stem = (scratch("radial") / "p").string();
  write_radial(stem, p);
  const RadialProfile back = read_radial(stem);
  CHECK(back.values() == p.values());
  CHECK(back.dr() == p.dr());
  CHECK(back.dim() == 3);
  CHECK(energy_radial(back, g62) == energy_radial(p, g62));
  CHECK(fs::exists(stem + ".csv"));
}

TEST_CASE("missing files raise IoError") {
  CHECK_THROWS_AS(read_measure_csv("/nonexistent/mu.csv"), IoError);
  CHECK_THROWS_AS(read_density("/nonexistent/f"), IoError);
  CHECK_THROWS_AS(read_text("/nonexistent/x"), IoError);
}

TEST_CASE("reports serialise") {
  const Json el = to_json(el_residual_measure(simplex_measure(2), g62));
  CHECK(el.contains("lambda_hat"));
  const Json d = to_json(diameter_bound(g62, 0.05, DiameterVariant::LocallyBounded));
  CHECK(d["variant"] == "locally_bounded");
  CHECK(to_json(classify_minimizer(simplex_measure(2)))["shape"] == "simplex");

  OptimizeTrace t;
  t.log(0, 1.0, 0.5);
  t.log(10, 0.5, 0.25);
  CHECK(t.to_csv().rfind("iter,energy,grad_norm", 0) == 0);
  CHECK(t.non_increasing());
}

TEST_CASE("reductions are independent of the worker count") {
  std::vector<double> v(100003);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> Z(0, 1);
  for (double& x : v) x = Z(rng);
  const double a = pairwise_sum(v), b = pairwise_sum(v);
  CHECK(a == b);
  double naive = 0;
  for (double x : v) naive += x;
  CHECK(a == doctest::Approx(naive).epsilon(1e-12));

  std::vector<double> out(1000, 0.0);
  parallel_for(out.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = static_cast<double>(i);
  });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<double>(i));
}
