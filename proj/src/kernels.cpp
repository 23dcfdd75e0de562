#include "nlmin/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nlmin/errors.hpp"

namespace nlmin {

std::string to_string(Regularity r) {
  switch (r) {
    case Regularity::Discontinuous: return "discontinuous";
    case Regularity::C0: return "C0";
    case Regularity::C1: return "C1";
    case Regularity::C2: return "C2";
  }
  return "unknown";
}

RadialKernel::RadialKernel(Spec spec) {
  if (!spec.eval) throw InvalidArgument("RadialKernel: eval is required");
  spec_ = std::make_shared<const Spec>(std::move(spec));
}

double RadialKernel::d1(double t) const {
  if (!spec_->d1) throw RegularityError("kernel '" + spec_->name + "': first derivative unavailable");
  return spec_->d1(t);
}

double RadialKernel::d2(double t) const {
  if (!spec_->d2) throw RegularityError("kernel '" + spec_->name + "': second derivative unavailable");
  return spec_->d2(t);
}

RadialKernel RadialKernel::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("RadialKernel::scaled: factor must be positive");
  auto base = spec_;
  Spec s;
  s.name = base->name + "*" + std::to_string(c);
  s.eval = [base, c](double t) { return c * base->eval(t); };
  if (base->d1) s.d1 = [base, c](double t) { return c * base->d1(t); };
  if (base->d2) s.d2 = [base, c](double t) { return c * base->d2(t); };
  s.regularity = base->regularity;
  if (base->lower_bound) s.lower_bound = c * *base->lower_bound;
  s.grows_at_infinity = base->grows_at_infinity;
  return RadialKernel(std::move(s));
}

RadialKernel RadialKernel::shifted(double c) const {
  auto base = spec_;
  Spec s = *base;
  s.name = base->name + "+" + std::to_string(c);
  s.eval = [base, c](double t) { return base->eval(t) + c; };
  if (base->lower_bound) s.lower_bound = *base->lower_bound + c;
  return RadialKernel(std::move(s));
}

// --- power law -------------------------------------------------------------

namespace {

bool small_integer(double x) { return x == std::floor(x) && x >= 0.0 && x <= 32.0; }

double fast_pow(double t, double e) {
  if (small_integer(e)) {
    int n = static_cast<int>(e);
    double r = 1.0, b = t;
    while (n > 0) {
      if (n & 1) r *= b;
      b *= b;
      n >>= 1;
    }
    return r;
  }
  return std::pow(t, e);
}

}  // namespace

PowerLawMinusKernel::PowerLawMinusKernel(double a, double b) : alpha(a), beta(b) {
  if (!(beta > 0.0) || !(alpha > beta) || !std::isfinite(alpha))
    throw InvalidArgument("PowerLawMinusKernel: need alpha > beta > 0");
}

double PowerLawMinusKernel::eval(double t) const { return fast_pow(t, alpha) / alpha - fast_pow(t, beta) / beta; }

double PowerLawMinusKernel::d1(double t) const { return fast_pow(t, alpha - 1.0) - fast_pow(t, beta - 1.0); }

double PowerLawMinusKernel::d2(double t) const {
  return (alpha - 1.0) * fast_pow(t, alpha - 2.0) - (beta - 1.0) * fast_pow(t, beta - 2.0);
}

Regularity PowerLawMinusKernel::regularity() const {
  if (beta >= 2.0) return Regularity::C2;
  if (beta >= 1.0) return Regularity::C1;
  return Regularity::C0;
}

RadialKernel PowerLawMinusKernel::kernel() const {
  const PowerLawMinusKernel self = *this;
  RadialKernel::Spec s;
  std::ostringstream name;
  name << "power_law_minus(alpha=" << alpha << ",beta=" << beta << ")";
  s.name = name.str();
  s.eval = [self](double t) { return self.eval(t); };
  const Regularity reg = regularity();
  if (reg >= Regularity::C1) s.d1 = [self](double t) { return self.d1(t); };
  if (reg >= Regularity::C2) s.d2 = [self](double t) { return self.d2(t); };
  s.regularity = reg;
  s.lower_bound = 1.0 / alpha - 1.0 / beta;
  s.grows_at_infinity = true;
  return RadialKernel(std::move(s));
}

// --- tabulated --------------------------------------------------------------

namespace {

struct Spline {
  std::vector<double> t, g, m;  // m: second derivatives at knots

  std::size_t segment(double x) const {
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = static_cast<std::size_t>(std::distance(t.begin(), it));
    return std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, t.size() - 2);
  }
  double left_slope() const {
    const double h = t[1] - t[0];
    return (g[1] - g[0]) / h - h * (2.0 * m[0] + m[1]) / 6.0;
  }
  double right_slope() const {
    const std::size_t n = t.size() - 1;
    const double h = t[n] - t[n - 1];
    return (g[n] - g[n - 1]) / h + h * (m[n - 1] + 2.0 * m[n]) / 6.0;
  }
  double eval(double x, int order) const {
    const std::size_t n = t.size() - 1;
    if (x <= t[0]) {
      const double s = left_slope();
      return order == 0 ? g[0] + s * (x - t[0]) : order == 1 ? s : 0.0;
    }
    if (x >= t[n]) {
      const double s = right_slope();
      return order == 0 ? g[n] + s * (x - t[n]) : order == 1 ? s : 0.0;
    }
    const std::size_t i = segment(x);
    const double h = t[i + 1] - t[i];
    const double a = (t[i + 1] - x) / h, b = (x - t[i]) / h;
    switch (order) {
      case 0:
        return a * g[i] + b * g[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
      case 1:
        return (g[i + 1] - g[i]) / h + (-(3 * a * a - 1) * m[i] + (3 * b * b - 1) * m[i + 1]) * h / 6.0;
      default:
        return a * m[i] + b * m[i + 1];
    }
  }
};

}  // namespace

RadialKernel tabulated_kernel(std::vector<double> t, std::vector<double> g, std::string name) {
  if (t.size() != g.size() || t.size() < 3) throw InvalidArgument("tabulated kernel: need >= 3 matching (t, g) rows");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(g[i])) throw InvalidArgument("tabulated kernel: non-finite entry");
    if (t[i] < 0.0) throw InvalidArgument("tabulated kernel: negative radius");
    if (i > 0 && !(t[i] > t[i - 1])) throw InvalidArgument("tabulated kernel: t must be strictly increasing");
  }
  auto sp = std::make_shared<Spline>();
  const std::size_t n = t.size();
  sp->t = std::move(t);
  sp->g = std::move(g);
  sp->m.assign(n, 0.0);
  // Tridiagonal solve for the natural spline (m_0 = m_{n-1} = 0).
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = sp->t[i] - sp->t[i - 1], h1 = sp->t[i + 1] - sp->t[i];
    const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
    const double rhs = (sp->g[i + 1] - sp->g[i]) / h1 - (sp->g[i] - sp->g[i - 1]) / h0;
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (rhs - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    sp->m[i] = d[i] - c[i] * sp->m[i + 1];
    if (i == 1) break;
  }
  RadialKernel::Spec s;
  s.name = std::move(name);
  s.eval = [sp](double x) { return sp->eval(x, 0); };
  s.d1 = [sp](double x) { return sp->eval(x, 1); };
  s.d2 = [sp](double x) { return sp->eval(x, 2); };
  s.regularity = Regularity::C2;
  s.grows_at_infinity = sp->right_slope() > 0.0;
  if (s.grows_at_infinity) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (int j = 0; j <= 16; ++j) {
        lo = std::min(lo, sp->eval(sp->t[i] + (sp->t[i + 1] - sp->t[i]) * j / 16.0, 0));
      }
    }
    if (sp->t[0] > 0.0) lo = std::min(lo, sp->eval(0.0, 0));
    s.lower_bound = lo;
  }
  return RadialKernel(std::move(s));
}

RadialKernel tabulated_kernel_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kernel table '" + path + "'");
  std::vector<double> t, g;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a >> b)) {
      if (first) {
        first = false;
        continue;
      }
      throw IoError("malformed kernel table row in '" + path + "': " + line);
    }
    first = false;
    t.push_back(a);
    g.push_back(b);
  }
  return tabulated_kernel(std::move(t), std::move(g), "tabulated(" + path + ")");
}

// --- bump kernel -------------------------------------------------------------

namespace {

// C2 quintic switch: 1 for x <= 0, 0 for x >= 1.
double smooth_off(double x, int order) {
  if (x <= 0.0) return order == 0 ? 1.0 : 0.0;
  if (x >= 1.0) return 0.0;
  const double x2 = x * x;
  switch (order) {
    case 0: return 1.0 - x2 * x * (10.0 - 15.0 * x + 6.0 * x2);
    case 1: return -30.0 * x2 * (1.0 - x) * (1.0 - x);
    default: return -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
  }
}

}  // namespace

RadialKernel bump_kernel(const BumpKernelParams& p) {
  if (!(p.background_depth > 0.0 && p.background_depth < 1.0) || !(p.well_width > 0.0) || !(p.slope > 0.0) ||
      !(p.rounding > 0.0) || !(p.cutoff_end > p.cutoff_start) || !(p.cutoff_start > 0.0))
    throw InvalidArgument("bump_kernel: invalid parameters");
  // Background: depth * 3 * g_{6,2}, i.e. depth * (t^6/2 - 3 t^2/2), minimum -depth at t = 1.
  const double dep = p.background_depth;
  const double l = p.well_width, s = p.slope, e = p.rounding;
  const double c0 = p.cutoff_start, c1 = p.cutoff_end;
  const double floor_depth = 1.0 - dep;

  // Well profile in u = (t - 1)/l, derivatives returned in u.
  auto wall = [=](double u, int order) {
    const double q = std::sqrt(e * e + u * u);
    switch (order) {
      case 0: return -floor_depth + s * (q - e);
      case 1: return s * u / q;
      default: return s * e * e / (q * q * q);
    }
  };
  auto well = [=](double t, int order) {
    const double u = (t - 1.0) / l;
    const double au = std::abs(u), sg = u < 0 ? -1.0 : 1.0;
    const double x = (au - c0) / (c1 - c0);
    const double E0 = smooth_off(x, 0);
    if (E0 == 0.0 && x >= 1.0) return 0.0;
    const double E1 = sg * smooth_off(x, 1) / (c1 - c0);
    const double E2 = smooth_off(x, 2) / ((c1 - c0) * (c1 - c0));
    const double W0 = wall(u, 0), W1 = wall(u, 1), W2 = wall(u, 2);
    switch (order) {
      case 0: return W0 * E0;
      case 1: return (W1 * E0 + W0 * E1) / l;
      default: return (W2 * E0 + 2.0 * W1 * E1 + W0 * E2) / (l * l);
    }
  };
  RadialKernel::Spec sp;
  std::ostringstream name;
  name << "bump(depth=" << dep << ",width=" << l << ")";
  sp.name = name.str();
  sp.eval = [=](double t) {
    const double t2 = t * t;
    return dep * (0.5 * t2 * t2 * t2 - 1.5 * t2) + well(t, 0);
  };
  sp.d1 = [=](double t) {
    const double t2 = t * t;
    return dep * (3.0 * t2 * t2 * t - 3.0 * t) + well(t, 1);
  };
  sp.d2 = [=](double t) {
    const double t2 = t * t;
    return dep * (15.0 * t2 * t2 - 3.0) + well(t, 2);
  };
  sp.regularity = Regularity::C2;
  sp.lower_bound = -1.0;
  sp.grows_at_infinity = true;
  return RadialKernel(std::move(sp));
}

// --- checks --------------------------------------------------------------------

double kernel_eval(const RadialKernel& k, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("kernel_eval: t must be >= 0");
  return k.eval(t);
}

std::optional<double> check_definitively_nondecreasing(const RadialKernel& k, double t_max, int n_samples) {
  if (!(t_max > 0.0)) throw InvalidArgument("check_definitively_nondecreasing: t_max must be > 0");
  if (n_samples < 2) throw InvalidArgument("check_definitively_nondecreasing: n_samples must be >= 2");
  std::vector<double> g(n_samples);
  for (int i = 0; i < n_samples; ++i) g[i] = k.eval(t_max * i / (n_samples - 1));
  int start = n_samples - 1;
  while (start > 0 && g[start - 1] <= g[start]) --start;
  if (start == n_samples - 1) return std::nullopt;
  return t_max * start / (n_samples - 1);
}

WeakRepulsivityReport check_weak_repulsivity(const RadialKernel& k, double t_max, int samples_per_unit) {
  if (!(t_max > 0.0)) throw InvalidArgument("check_weak_repulsivity: t_max must be > 0");
  WeakRepulsivityReport r;
  r.g0_is_zero = std::abs(k.eval(0.0)) <= 1e-12;
  const int n = std::max(2, static_cast<int>(std::ceil(t_max * samples_per_unit)));
  const double h = t_max / n;
  r.negative_near_origin = k.eval(h) < 0.0;
  r.positive_at_range = k.eval(t_max) > 0.0;
  double prev = k.eval(0.0);
  for (int i = 1; i <= n; ++i) {
    const double v = k.eval(i * h);
    if (prev < 0.0 && v > 0.0) r.crossover = i * h;
    prev = v;
  }
  return r;
}

ConfinementHypotheses::ConfinementHypotheses(double e, double x) : eta(e), xi(x) {
  if (!(eta > 0.0 && eta < 1.0 / 64.0)) throw InvalidArgument("ConfinementHypotheses: eta must lie in (0, 1/64)");
  if (!(xi > 0.0 && xi < 1.0 / 120.0)) throw InvalidArgument("ConfinementHypotheses: xi must lie in (0, 1/120)");
}

ConfinementReport check_confinement_hypotheses(const RadialKernel& k, const ConfinementHypotheses& hyp,
                                               int samples_per_unit, double t_scan) {
  if (k.regularity() < Regularity::C0) throw InvalidArgument("check_confinement_hypotheses: kernel must be continuous");
  if (samples_per_unit < 1000) throw InvalidArgument("check_confinement_hypotheses: need >= 1000 samples per unit");
  if (!(t_scan >= 1.5)) throw InvalidArgument("check_confinement_hypotheses: scan horizon must be >= 3/2");
  ConfinementReport r;
  r.t_scan = t_scan;
  r.grows_at_infinity = k.grows_at_infinity();

  const double g0 = k.eval(0.0);
  if (std::abs(g0) > 1e-12) r.violations.push_back({"g(0)=0", 0.0, g0});
  const double g1 = k.eval(1.0);
  if (std::abs(g1 + 1.0) > 1e-9) r.violations.push_back({"g(1)=-1", 1.0, g1});

  const long n = static_cast<long>(std::ceil(t_scan * samples_per_unit));
  r.sampled_min = g0;
  r.sampled_argmin = 0.0;
  for (long i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / samples_per_unit;
    if (t > t_scan) break;
    const double v = k.eval(t);
    if (v < r.sampled_min) {
      r.sampled_min = v;
      r.sampled_argmin = t;
    }
    if (t <= 1.5 && (t <= 1.0 - hyp.xi || t >= 1.0 + hyp.xi) && !(v > -hyp.eta))
      r.violations.push_back({"g>-eta on [0,3/2]\\(1-xi,1+xi)", t, v});
    if (t >= 1.5 && !(v > 0.0)) r.violations.push_back({"g>0 on [3/2,t_scan]", t, v});
  }
  if (r.sampled_min < g1 - 1e-9) r.violations.push_back({"min g = g(1)", r.sampled_argmin, r.sampled_min});
  r.pass = r.violations.empty();
  return r;
}

SecondDerivativeRatioReport check_second_derivative_ratio(const RadialKernel& k, double xi, int n_samples) {
  if (!k.has_d2() || k.regularity() < Regularity::C2)
    throw RegularityError("check_second_derivative_ratio: kernel '" + k.name() + "' has no second derivative");
  if (!(xi > 0.0 && xi < 1.0 / 120.0)) throw InvalidArgument("check_second_derivative_ratio: xi must lie in (0, 1/120)");
  if (n_samples < 2) throw InvalidArgument("check_second_derivative_ratio: n_samples must be >= 2");
  // The margin g''(t) + 7/2 g''(s) is separable, so the worst pair is the
  // pair of separate minimisers over the two open intervals.
  double min_t = std::numeric_limits<double>::infinity(), arg_t = 0.0;
  double min_s = std::numeric_limits<double>::infinity(), arg_s = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double f = (i + 0.5) / n_samples;
    const double t = 5.0 * xi * f;
    const double s = 1.0 - 6.0 * xi + 12.0 * xi * f;
    const double gt = k.d2(t), gs = k.d2(s);
    if (gt < min_t) min_t = gt, arg_t = t;
    if (gs < min_s) min_s = gs, arg_s = s;
  }
  SecondDerivativeRatioReport r;
  r.worst_t = arg_t;
  r.worst_s = arg_s;
  r.margin = min_t + 3.5 * min_s;
  r.pass = r.margin > 0.0;
  return r;
}

}  // namespace nlmin
