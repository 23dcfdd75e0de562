#include "nlmin/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlmin/errors.hpp"
#include "nlmin/parallel.hpp"
#include "nlmin/quadrature.hpp"

namespace nlmin {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite coordinates");
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(PointSet points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.cols() != weights_.size()) throw DimensionMismatch("DiscreteMeasure: points/weights size mismatch");
  require_finite(points_, "DiscreteMeasure");
  if (!weights_.allFinite() || (weights_.array() < 0.0).any())
    throw InvalidArgument("DiscreteMeasure: weights must be finite and non-negative");
}

DiscreteMeasure DiscreteMeasure::uniform(PointSet points) {
  const auto n = points.cols();
  if (n == 0) throw InvalidArgument("DiscreteMeasure::uniform: no atoms");
  return DiscreteMeasure(std::move(points), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure simplex_measure(int N) { return DiscreteMeasure::uniform(build_simplex(N).vertices); }

GridSpec::GridSpec(Eigen::VectorXd o, double h, std::vector<int> d)
    : origin(std::move(o)), spacing(h), dims(std::move(d)) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidArgument("GridSpec: spacing must be positive");
  if (dims.empty() || static_cast<Eigen::Index>(dims.size()) != origin.size())
    throw DimensionMismatch("GridSpec: origin/dims mismatch");
  if (!origin.allFinite()) throw InvalidArgument("GridSpec: non-finite origin");
  for (int n : dims)
    if (n < 1) throw InvalidArgument("GridSpec: every axis needs >= 1 cell");
}

GridSpec GridSpec::cube(int N, double lower, double upper, double spacing) {
  if (!(upper > lower)) throw InvalidArgument("GridSpec::cube: empty box");
  const int n = std::max(1, static_cast<int>(std::lround((upper - lower) / spacing)));
  return GridSpec(Eigen::VectorXd::Constant(N, lower), spacing, std::vector<int>(N, n));
}

std::size_t GridSpec::cell_count() const {
  std::size_t c = 1;
  for (int n : dims) c *= static_cast<std::size_t>(n);
  return c;
}

double GridSpec::cell_volume() const { return std::pow(spacing, dim()); }

std::vector<int> GridSpec::multi_index(std::size_t flat) const {
  std::vector<int> idx(dims.size());
  for (int a = dim() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % dims[a]);
    flat /= dims[a];
  }
  return idx;
}

Eigen::VectorXd GridSpec::cell_center(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Eigen::VectorXd c(dim());
  for (int a = 0; a < dim(); ++a) c(a) = origin(a) + (idx[a] + 0.5) * spacing;
  return c;
}

PointSet GridSpec::centers() const {
  PointSet c(dim(), static_cast<Eigen::Index>(cell_count()));
  for (std::size_t i = 0; i < cell_count(); ++i) c.col(static_cast<Eigen::Index>(i)) = cell_center(i);
  return c;
}

GridDensity::GridDensity(GridSpec grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.cell_count()) throw DimensionMismatch("GridDensity: value count does not match grid");
  for (double v : values_)
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("GridDensity: values must lie in [0, 1]");
}

double GridDensity::mass() const { return pairwise_sum(values_) * grid_.cell_volume(); }

std::vector<double> radial_shell_weights(int N, double dr, int n) {
  const double area = N * unit_ball_volume(N);
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) w[k] = area * std::pow((k + 0.5) * dr, N - 1) * dr;
  return w;
}

RadialProfile::RadialProfile(int dim, double dr, std::vector<double> values)
    : dim_(dim), dr_(dr), values_(std::move(values)) {
  if (dim_ < 1) throw InvalidArgument("RadialProfile: dimension must be >= 1");
  if (!(dr_ > 0.0) || !std::isfinite(dr_)) throw InvalidArgument("RadialProfile: dr must be positive");
  if (values_.empty()) throw InvalidArgument("RadialProfile: need at least one shell");
  for (double v : values_)
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("RadialProfile: values must lie in [0, 1]");
}

std::vector<double> RadialProfile::shell_weights() const { return radial_shell_weights(dim_, dr_, shells()); }

double RadialProfile::mass() const {
  const auto w = shell_weights();
  std::vector<double> terms(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) terms[k] = values_[k] * w[k];
  return pairwise_sum(terms);
}

std::vector<double> project_box_mass_weighted(std::span<const double> v, std::span<const double> vol, double m,
                                              double* lambda_out) {
  if (v.size() != vol.size()) throw DimensionMismatch("project_box_mass: values/volumes size mismatch");
  if (v.empty()) throw InfeasibleMass("project_box_mass: no cells");
  double capacity = 0.0;
  for (double w : vol) capacity += w;
  if (!(m > 0.0)) throw InfeasibleMass("project_box_mass: mass must be positive");
  if (m > capacity * (1.0 + 1e-12)) throw InfeasibleMass("project_box_mass: mass exceeds capacity");
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument("project_box_mass: non-finite input");

  auto mass_at = [&](double lam) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += vol[i] * std::clamp(v[i] - lam, 0.0, 1.0);
    return s;
  };
  double lo = *std::min_element(v.begin(), v.end()) - 1.0;
  double hi = *std::max_element(v.begin(), v.end());
  if (m >= capacity * (1.0 - 1e-15)) {
    if (lambda_out) *lambda_out = hi - 1.0;
    return std::vector<double>(v.size(), 1.0);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double mm = mass_at(mid);
    if (mm > m) lo = mid;
    else hi = mid;
  }
  double lam = 0.5 * (lo + hi);
  // Exact multiplier on the free set identified by bisection.
  for (int pass = 0; pass < 3; ++pass) {
    double free_vol = 0.0, free_sum = 0.0, ones = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x = v[i] - lam;
      if (x >= 1.0) ones += vol[i];
      else if (x > 0.0) free_vol += vol[i], free_sum += vol[i] * v[i];
    }
    if (!(free_vol > 0.0)) break;
    const double exact = (free_sum + ones - m) / free_vol;
    bool consistent = true;
    for (std::size_t i = 0; i < v.size() && consistent; ++i) {
      const double x = v[i] - lam, y = v[i] - exact;
      if ((x >= 1.0) != (y >= 1.0) || (x > 0.0) != (y > 0.0)) consistent = false;
    }
    if (!consistent || exact == lam) break;
    lam = exact;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i] - lam, 0.0, 1.0);
  if (lambda_out) *lambda_out = lam;
  return out;
}

std::vector<double> project_box_mass(std::span<const double> values, double cell_volume, double m) {
  if (!(cell_volume > 0.0)) throw InvalidArgument("project_box_mass: cell_volume must be positive");
  if (m > cell_volume * static_cast<double>(values.size()) * (1.0 + 1e-12) || !(m > 0.0))
    throw InfeasibleMass("project_box_mass: infeasible mass");
  std::vector<double> vol(values.size(), cell_volume);
  return project_box_mass_weighted(values, vol, m);
}

DiscreteMeasure normalize_to_probability(const DiscreteMeasure& mu) {
  const double total = mu.total_mass();
  if (!(total > 0.0)) throw ZeroMass("normalize_to_probability: measure has zero mass");
  return DiscreteMeasure(mu.points(), mu.weights() / total);
}

GridDensity measure_to_density(const DiscreteMeasure& mu, double m, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, double spacing) {
  const int N = mu.dim();
  if (lower.size() != N || upper.size() != N) throw DimensionMismatch("measure_to_density: box dimension mismatch");
  if (!(m > 0.0)) throw InvalidArgument("measure_to_density: mass must be positive");
  if (!(spacing > 0.0)) throw InvalidArgument("measure_to_density: spacing must be positive");
  if (std::abs(mu.total_mass() - 1.0) > 1e-12) throw InvalidArgument("measure_to_density: mu must be a probability");
  const double side = std::pow(m, 1.0 / N);
  const int sub = std::max(1, static_cast<int>(std::lround(side / spacing)));
  std::vector<int> cubes(N);
  for (int a = 0; a < N; ++a) {
    if (!(upper(a) > lower(a))) throw InvalidArgument("measure_to_density: empty box");
    cubes[a] = std::max(1, static_cast<int>(std::ceil((upper(a) - lower(a)) / side - 1e-12)));
  }
  std::vector<int> dims(N);
  for (int a = 0; a < N; ++a) dims[a] = cubes[a] * sub;
  GridSpec grid(lower, side / sub, dims);

  // Measure of every cube.
  std::size_t ncubes = 1;
  for (int c : cubes) ncubes *= static_cast<std::size_t>(c);
  std::vector<double> cube_mass(ncubes, 0.0);
  for (int i = 0; i < mu.size(); ++i) {
    std::size_t flat = 0;
    for (int a = 0; a < N; ++a) {
      const double x = mu.points()(a, i);
      int q = static_cast<int>(std::floor((x - lower(a)) / side));
      if (x < lower(a) || q >= cubes[a]) throw InvalidArgument("measure_to_density: atom outside the box");
      q = std::clamp(q, 0, cubes[a] - 1);
      flat = flat * cubes[a] + q;
    }
    cube_mass[flat] += mu.weights()(i);
  }
  std::vector<double> values(grid.cell_count());
  for (std::size_t c = 0; c < values.size(); ++c) {
    const auto idx = grid.multi_index(c);
    std::size_t flat = 0;
    for (int a = 0; a < N; ++a) flat = flat * cubes[a] + idx[a] / sub;
    const double v = cube_mass[flat];
    if (v > 1.0 + 1e-12) throw InfeasibleMass("measure_to_density: cube measure exceeds 1");
    values[c] = std::min(v, 1.0);
  }
  return GridDensity(std::move(grid), std::move(values));
}

GridDensity radial_to_grid(const RadialProfile& p, double spacing) {
  if (!(spacing > 0.0)) throw InvalidArgument("radial_to_grid: spacing must be positive");
  const int N = p.dim();
  const double R = p.r_max();
  const int n = std::max(1, static_cast<int>(std::ceil(2.0 * R / spacing)));
  const double half = 0.5 * n * spacing;
  GridSpec grid(Eigen::VectorXd::Constant(N, -half), spacing, std::vector<int>(N, n));
  std::vector<double> values(grid.cell_count(), 0.0);
  for (std::size_t c = 0; c < values.size(); ++c) {
    const double r = grid.cell_center(c).norm();
    const int k = static_cast<int>(std::floor(r / p.dr()));
    if (k < p.shells()) values[c] = p.values()[k];
  }
  return GridDensity(std::move(grid), std::move(values));
}

}  // namespace nlmin
