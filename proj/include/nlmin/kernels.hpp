#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nlmin {

enum class Regularity { Discontinuous = -1, C0 = 0, C1 = 1, C2 = 2 };

std::string to_string(Regularity r);

/// Radial interaction profile g(t), t = |x| >= 0, with optional first and
/// second radial derivatives. Immutable; copies share the same callables.
///
/// Only locally bounded kernels are representable: eval must be finite on
/// [0, inf). Derivatives that are unbounded (e.g. g'' at 0 for power laws
/// with exponent below 2) are declared unavailable and `regularity` is
/// lowered accordingly.
class RadialKernel {
 public:
  using Fn = std::function<double(double)>;

  struct Spec {
    std::string name;
    Fn eval;
    Fn d1;  // empty when unavailable
    Fn d2;  // empty when unavailable
    Regularity regularity = Regularity::C0;
    std::optional<double> lower_bound;  // nullopt: unbounded / unknown
    bool grows_at_infinity = false;
  };

  explicit RadialKernel(Spec spec);

  double operator()(double t) const { return spec_->eval(t); }
  double eval(double t) const { return spec_->eval(t); }
  double d1(double t) const;
  double d2(double t) const;

  bool has_d1() const { return static_cast<bool>(spec_->d1); }
  bool has_d2() const { return static_cast<bool>(spec_->d2); }
  Regularity regularity() const { return spec_->regularity; }
  const std::optional<double>& lower_bound() const { return spec_->lower_bound; }
  bool grows_at_infinity() const { return spec_->grows_at_infinity; }
  const std::string& name() const { return spec_->name; }

  /// c * g, with derivatives and bounds scaled accordingly (c > 0).
  RadialKernel scaled(double c) const;
  /// g + c; used to build the non-negative shift g - inf g.
  RadialKernel shifted(double c) const;

 private:
  std::shared_ptr<const Spec> spec_;
};

/// g(t) = t^alpha/alpha - t^beta/beta with alpha > beta > 0. The minimum
/// sits at t = 1 with g(1) = 1/alpha - 1/beta and g''(1) = alpha - beta.
struct PowerLawMinusKernel {
  double alpha;
  double beta;

  PowerLawMinusKernel(double alpha, double beta);

  double eval(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  /// C2 for beta >= 2, C1 for 1 <= beta < 2, C0 otherwise.
  Regularity regularity() const;

  RadialKernel kernel() const;
  operator RadialKernel() const { return kernel(); }
};

/// Natural cubic spline through (t_i, g_i); linear extrapolation outside the
/// table. grows_at_infinity is declared when the right end slope is positive.
RadialKernel tabulated_kernel(std::vector<double> t, std::vector<double> g, std::string name = "tabulated");
/// Reads a two-column CSV (t, g(t)); a non-numeric first line is treated as header.
RadialKernel tabulated_kernel_from_csv(const std::string& path);

/// Parameters of the confinement ("bump") kernel: a weak scaled power-law
/// background plus a narrow convex well of depth ~1 centred at t = 1.
struct BumpKernelParams {
  double background_depth = 0.005;  // background is depth * g_{6,2} normalised to min -1
  double well_width = 1.0 / 150.0;  // length scale of the well in t
  double slope = 1.8;                // asymptotic slope of the hyperbolic wall, per well_width
  double rounding = 0.5;             // hyperbola rounding, in units of well_width
  double cutoff_start = 6.2;         // wall kept intact up to this many well widths
  double cutoff_end = 7.5;           // wall fully switched off beyond this
};

/// g(0) = 0, g(1) = min g = -1, g > -eta away from the well, g > 0 past 3^{1/4}.
RadialKernel bump_kernel(const BumpKernelParams& p = {});

// ---------------------------------------------------------------------------
// Sampled hypothesis checks. Every result is a finite-sample certificate.

/// kernel_eval with the t >= 0 precondition enforced.
double kernel_eval(const RadialKernel& k, double t);

/// Smallest sampled R such that g is non-decreasing on the uniform sample
/// grid of [R, t_max]; nullopt if only the last sample qualifies.
std::optional<double> check_definitively_nondecreasing(const RadialKernel& k, double t_max, int n_samples);

struct WeakRepulsivityReport {
  bool g0_is_zero = false;
  bool negative_near_origin = false;
  bool positive_at_range = false;
  /// Last sampled sign change from negative to positive, if any.
  std::optional<double> crossover;
  bool sampled_certificate = true;
};

WeakRepulsivityReport check_weak_repulsivity(const RadialKernel& k, double t_max, int samples_per_unit = 10000);

struct ConfinementHypotheses {
  double eta;
  double xi;
  /// Throws InvalidArgument unless 0 < eta < 1/64 and 0 < xi < 1/120.
  ConfinementHypotheses(double eta, double xi);
};

struct KernelViolation {
  std::string clause;
  double t;
  double value;
};

struct ConfinementReport {
  bool pass = false;
  std::vector<KernelViolation> violations;
  double sampled_min = 0.0;
  double sampled_argmin = 0.0;
  double t_scan = 10.0;
  bool grows_at_infinity = false;
  bool sampled_certificate = true;
};

ConfinementReport check_confinement_hypotheses(const RadialKernel& k, const ConfinementHypotheses& hyp,
                                               int samples_per_unit = 10000, double t_scan = 10.0);

struct SecondDerivativeRatioReport {
  bool pass = false;
  double worst_t = 0.0;
  double worst_s = 0.0;
  /// min over sampled pairs of g''(t) + (7/2) g''(s).
  double margin = 0.0;
  bool sampled_certificate = true;
};

SecondDerivativeRatioReport check_second_derivative_ratio(const RadialKernel& k, double xi, int n_samples = 10000);

}  // namespace nlmin
