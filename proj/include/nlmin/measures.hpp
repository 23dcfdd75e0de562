#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "nlmin/geometry.hpp"

namespace nlmin {

/// Weighted point cloud in R^N: sum_i w_i delta_{x_i}.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  /// points: N x n (one column per atom); weights >= 0. Rejects NaN/inf.
  DiscreteMeasure(PointSet points, Eigen::VectorXd weights);

  /// Equal weights 1/n on the given atoms.
  static DiscreteMeasure uniform(PointSet points);

  int dim() const { return static_cast<int>(points_.rows()); }
  int size() const { return static_cast<int>(points_.cols()); }
  const PointSet& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double total_mass() const { return weights_.sum(); }

 private:
  PointSet points_;
  Eigen::VectorXd weights_;
};

/// mu_N: uniform probability on the vertices of the unit simplex in R^N.
DiscreteMeasure simplex_measure(int N);

/// Uniform N-D grid geometry. Cell c (multi-index) has centre
/// origin + (c + 1/2) * spacing; the last axis varies fastest.
struct GridSpec {
  Eigen::VectorXd origin;  // lower corner
  double spacing = 0.0;
  std::vector<int> dims;

  GridSpec() = default;
  GridSpec(Eigen::VectorXd origin, double spacing, std::vector<int> dims);
  /// Cells of the given spacing covering [lower, upper]^N (count rounded to nearest).
  static GridSpec cube(int N, double lower, double upper, double spacing);

  int dim() const { return static_cast<int>(dims.size()); }
  std::size_t cell_count() const;
  double cell_volume() const;
  double volume() const { return cell_volume() * static_cast<double>(cell_count()); }
  std::vector<int> multi_index(std::size_t flat) const;
  Eigen::VectorXd cell_center(std::size_t flat) const;
  /// All cell centres as an N x cells matrix.
  PointSet centers() const;
};

/// Values in [0, 1] per cell; mass = sum(values) * h^N.
class GridDensity {
 public:
  GridDensity() = default;
  GridDensity(GridSpec grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  const std::vector<double>& values() const { return values_; }
  double mass() const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Spherically symmetric density f(|x|) on shells [k dr, (k+1) dr) with
/// midpoints r_k = (k + 1/2) dr. Mass uses the midpoint shell rule
/// N omega_N r_k^{N-1} dr.
class RadialProfile {
 public:
  RadialProfile() = default;
  RadialProfile(int dim, double dr, std::vector<double> values);

  int dim() const { return dim_; }
  double dr() const { return dr_; }
  int shells() const { return static_cast<int>(values_.size()); }
  double r_max() const { return dr_ * shells(); }
  const std::vector<double>& values() const { return values_; }
  double radius(int k) const { return (k + 0.5) * dr_; }
  std::vector<double> shell_weights() const;
  double mass() const;

 private:
  int dim_ = 0;
  double dr_ = 0.0;
  std::vector<double> values_;
};

/// Midpoint shell volumes N omega_N r_k^{N-1} dr for n shells of width dr.
std::vector<double> radial_shell_weights(int N, double dr, int n);

/// Euclidean projection onto {0 <= v <= 1, sum v * cell_volume = m}:
/// clip(v - lambda, 0, 1) with lambda found by bisection.
std::vector<double> project_box_mass(std::span<const double> values, double cell_volume, double m);
/// Same with per-entry volumes (weighted projection, identical clip form).
std::vector<double> project_box_mass_weighted(std::span<const double> values, std::span<const double> volumes,
                                              double m, double* lambda_out = nullptr);

DiscreteMeasure normalize_to_probability(const DiscreteMeasure& mu);

/// Partition of [lower, upper] into cubes of volume m (side m^{1/N}) anchored
/// at `lower`; each cube Q carries the constant value mu(Q). Each cube is
/// represented by round(side / spacing)^N cells of the output grid.
GridDensity measure_to_density(const DiscreteMeasure& mu, double m, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, double spacing);

/// Samples f(|x - center|) at the cell centres of a grid covering the profile.
GridDensity radial_to_grid(const RadialProfile& p, double spacing);

}  // namespace nlmin
