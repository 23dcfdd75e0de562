#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "nlmin/kernels.hpp"
#include "nlmin/measures.hpp"

namespace nlmin {

/// Euler–Lagrange residuals. Density fields: lambda_hat, viol_interior,
/// viol_zero, viol_one, tau. Measure fields: lambda_hat, viol_support,
/// viol_off plus the sampled probe margin.
struct ELReport {
  enum class Kind { Density, Measure };
  Kind kind = Kind::Density;
  double lambda_hat = 0.0;
  double viol_interior = 0.0;
  double viol_zero = 0.0;
  double viol_one = 0.0;
  double tau = 0.0;
  double viol_support = 0.0;
  double viol_off = 0.0;
  /// min over probes of (psi - lambda_hat); positive means the strict inequality held on the sample.
  double off_margin = 0.0;
  int n_probes = 0;
  int n_interior = 0;

  double max_violation() const;
};

enum class DiameterVariant { General, LocallyBounded };
std::string to_string(DiameterVariant v);

struct DiameterBoundReport {
  double R = 0.0;
  double R_plus = 0.0;
  double D = 0.0;
  double C_m = 0.0;
  double kappa = 0.0;
  DiameterVariant variant = DiameterVariant::LocallyBounded;
  double R_bar = 0.0;      // certified monotonicity threshold
  double g_shift = 0.0;    // g - g_shift >= 0 is the kernel used for the constants
};

struct DiameterBoundOptions {
  int dim = 2;
  double ratio = 1.05;
  double cap = 1e6;
  double monotone_t_max = 100.0;
  int monotone_samples = 100001;
  int n_shells = 512;
  int n_quad = 128;
};

double energy_cross_discrete(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, const RadialKernel& k);
double energy_discrete(const DiscreteMeasure& mu, const RadialKernel& k);

/// Midpoint double sum including diagonal g(0) terms.
double energy_density(const GridDensity& f, const RadialKernel& k);
double energy_cross_density(const GridDensity& f1, const GridDensity& f2, const RadialKernel& k);

double potential_at(const DiscreteMeasure& mu, const RadialKernel& k, const Eigen::VectorXd& x);
double potential_at(const GridDensity& f, const RadialKernel& k, const Eigen::VectorXd& x);
/// psi_f at every cell centre.
std::vector<double> density_potential(const GridDensity& f, const RadialKernel& k);

Eigen::VectorXd potential_grad(const DiscreteMeasure& mu, const RadialKernel& k, const Eigen::VectorXd& x);
Eigen::MatrixXd potential_hessian(const DiscreteMeasure& mu, const RadialKernel& k, const Eigen::VectorXd& x);

struct PositiveDirection {
  Eigen::VectorXd v_best;
  double value = 0.0;
};
/// Top eigenpair of the potential Hessian at x.
PositiveDirection hessian_positive_direction(const DiscreteMeasure& mu, const RadialKernel& k,
                                             const Eigen::VectorXd& x);

/// Spherical average G(r, s) of g(|r e_1 - s w|) in R^N.
double radial_reduced_kernel(const RadialKernel& k, int N, double r, double s, int n_quad = 128);
/// G(r_j, r_l) over shell midpoints, n x n.
Eigen::MatrixXd radial_kernel_matrix(const RadialKernel& k, int N, double dr, int n, int n_quad = 128);
double energy_radial(const RadialProfile& p, const RadialKernel& k, int n_quad = 128);
/// Same with a precomputed radial_kernel_matrix.
double energy_radial(const RadialProfile& p, const Eigen::MatrixXd& G);

ELReport el_residual_density(const GridDensity& f, const RadialKernel& k, double tau = 1e-3);
/// Same from precomputed potentials (one per cell).
ELReport el_residual_density(const GridDensity& f, const std::vector<double>& psi, double tau);
ELReport el_residual_radial(const RadialProfile& p, const Eigen::MatrixXd& G, double tau = 1e-3);
/// probes: N x p off-support points; when absent, 2000 seeded samples at
/// distance >= probe_exclusion from every atom are drawn.
ELReport el_residual_measure(const DiscreteMeasure& mu, const RadialKernel& k,
                             const std::optional<PointSet>& probes = std::nullopt, double probe_exclusion = 0.05);

/// Fraction of the unit sphere within angle theta of a fixed direction.
double cap_fraction(int N, double theta);
/// omega_N R^N / |C| for the cone piece {4R <= |z| <= 5R, angle <= pi/15}.
double diameter_kappa(int N);

DiameterBoundReport diameter_bound(const RadialKernel& k, double m, DiameterVariant variant,
                                   const DiameterBoundOptions& opts = {});

}  // namespace nlmin
