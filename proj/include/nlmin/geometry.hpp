#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace nlmin {

/// Points are stored column-wise: an N x n matrix holds n points of R^N.
using PointSet = Eigen::MatrixXd;

/// Regular unit-edge simplex with N+1 vertices, centred at the origin.
struct Simplex {
  int dim = 0;
  PointSet vertices;  // N x (N+1)
  double height = 0.0;
  double circumradius = 0.0;
};

/// Height sqrt((N+1)/(2N)) of the unit regular simplex in R^N.
double simplex_height(int N);
/// Circumradius sqrt(N/(2N+2)).
double simplex_circumradius(int N);

/// Built by recursive lifting: the (N-1)-simplex is placed in the hyperplane
/// at height -(H_N - C_N) and the apex at height C_N on the new axis.
Simplex build_simplex(int N);

/// min over unit v of sum_i <v, x_i - x_1>^2, closed form: 1 (N = 1), 1/2 (N >= 2).
double k_constant(int N);

/// Same constant by direction sampling (Fibonacci sphere for N = 3, seeded
/// uniform directions otherwise) followed by Nelder–Mead refinement.
double k_constant_numeric(int N, int n_directions, std::uint64_t seed = 0);

struct Cluster {
  Eigen::VectorXd center;  // mass-weighted centroid
  double diameter = 0.0;
  double mass = 0.0;
  std::vector<int> members;  // column indices into the input
};

struct ClusterReport {
  std::vector<Cluster> clusters;  // sorted by center, lexicographically
  Eigen::MatrixXd pairwise_center_distances;
  double unclustered_mass = 0.0;
  double total_mass = 0.0;
};

/// Single-linkage clustering: points closer than link_radius share a
/// cluster. Clusters lighter than min_cluster_mass are reported as
/// unclustered mass.
ClusterReport cluster_support(const PointSet& points, const Eigen::VectorXd& weights, double link_radius,
                              double min_cluster_mass = 0.0);

/// Symmetric Hausdorff distance between finite non-empty point sets.
double hausdorff_distance(const PointSet& a, const PointSet& b);

struct SimplexAlignment {
  double residual = 0.0;     // RMS distance after alignment
  Eigen::MatrixXd rotation;  // orthogonal, maps centred cluster centres onto vertices
  Eigen::VectorXd translation;
  std::vector<int> assignment;  // cluster i -> vertex assignment[i]
};

/// Least-squares rigid alignment (reflections allowed) of the cluster centres
/// onto the simplex vertices. All assignments are tried for N <= 3.
SimplexAlignment align_to_simplex_detailed(const ClusterReport& report, const Simplex& simplex);
double align_to_simplex(const ClusterReport& report, const Simplex& simplex);

/// Applies an alignment to arbitrary points: rotation * (p - centroid) + ... as
/// computed in align_to_simplex_detailed.
PointSet apply_alignment(const SimplexAlignment& al, const PointSet& points);

}  // namespace nlmin
