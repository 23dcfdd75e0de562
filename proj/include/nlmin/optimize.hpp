#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlmin/energy.hpp"
#include "nlmin/geometry.hpp"
#include "nlmin/kernels.hpp"
#include "nlmin/measures.hpp"

namespace nlmin {

struct OptimizeOptions {
  int max_iters = 20000;
  double grad_tol = 1e-8;
  double step_init = 0.0;  // <= 0: 0.1 / sampled Lipschitz estimate
  double backtrack = 0.5;
  std::uint64_t seed = 0;
  double merge_radius = 1e-3;
  int log_every = 10;
  bool weight_polish = true;
  double perturbation = 0.1;  // densities: relative amplitude of the seeded initial perturbation

  void validate() const;
  /// Defaults for the density and radial solvers at mass m.
  static OptimizeOptions for_density(double m);
};

struct OptimizeTrace {
  std::vector<int> iters;
  std::vector<double> energies;
  std::vector<double> grad_norms;
  double final_grad_norm = 0.0;
  int iterations = 0;
  std::string reason;

  void log(int iter, double energy, double grad_norm);
  bool non_increasing(double rel_tol = 1e-13) const;
  std::string to_csv() const;
};

struct MeasureResult {
  DiscreteMeasure measure;
  OptimizeTrace trace;
};
struct DensityResult {
  GridDensity density;
  OptimizeTrace trace;
};
struct RadialResult {
  RadialProfile profile;
  OptimizeTrace trace;
};

/// Particle descent on (1/n) sum delta_{x_i}, alternated with weight polishing
/// and merging. `init` replaces the seeded uniform-in-ball start.
MeasureResult minimize_measure(const RadialKernel& k, int N, int n_particles, const OptimizeOptions& opts,
                               const std::optional<DiscreteMeasure>& init = std::nullopt);
/// Simplex vertices displaced by seeded Gaussian noise of the given size.
DiscreteMeasure perturbed_simplex(int N, double perturbation, std::uint64_t seed);
/// Best of minimize_measure over seeds opts.seed, opts.seed + 1, ...
MeasureResult minimize_measure_multistart(const RadialKernel& k, int N, int n_particles, const OptimizeOptions& opts,
                                          int n_seeds = 8);

/// Frozen-position minimisation of w.Gw over the probability simplex.
/// Returns the polished measure with zero-weight atoms removed.
DiscreteMeasure polish_weights(const DiscreteMeasure& mu, const RadialKernel& k, int max_iters = 500);
/// Merges atoms closer than radius into their weighted centroid unless that raises the energy.
DiscreteMeasure merge_close_atoms(const DiscreteMeasure& mu, const RadialKernel& k, double radius);

DensityResult minimize_density(const RadialKernel& k, double m, const GridSpec& grid, const OptimizeOptions& opts,
                               const std::optional<GridDensity>& init = std::nullopt);

RadialResult minimize_radial(const RadialKernel& k, int N, double m, double r_max, int n_shells,
                             const OptimizeOptions& opts, const std::optional<RadialProfile>& init = std::nullopt,
                             int n_quad = 128);

struct DensityComponent {
  std::vector<std::size_t> cells;
  double mass = 0.0;
  Eigen::VectorXd centroid;
};
/// Face-connected components of {f > threshold}.
std::vector<DensityComponent> density_components(const GridDensity& f, double threshold = 0.01);
/// |{lo < f < 1 - lo}| / |{f > lo}| by volume.
double intermediate_fraction(const GridDensity& f, double lo = 0.01);
double intermediate_fraction(const RadialProfile& p, double lo = 0.01);
/// Centres of cells with f > threshold.
PointSet density_support(const GridDensity& f, double threshold = 0.01);

struct SweepRow {
  double m = 0.0;
  double intermediate_fraction = 0.0;
  int n_components = 0;
  double hausdorff_to_scaled_support = 0.0;
  double energy = 0.0;
};
std::vector<SweepRow> mass_sweep(const RadialKernel& k, const std::vector<double>& masses, const GridSpec& grid,
                                 const OptimizeOptions& opts, const std::optional<DiscreteMeasure>& reference = std::nullopt);

struct Classification {
  std::string shape;  // simplex | sphere | annulus | ball | other
  std::map<std::string, double> diagnostics;
};
Classification classify_minimizer(const DiscreteMeasure& mu);
Classification classify_minimizer(const GridDensity& f);
Classification classify_minimizer(const RadialProfile& p);

}  // namespace nlmin
