#include "nlmin/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>

#include "nlmin/errors.hpp"
#include "nlmin/parallel.hpp"
#include "nlmin/quadrature.hpp"

namespace nlmin {

namespace {

// Strict weak order on measures so that cross energies are evaluated in one
// canonical argument order.
bool canonical_less(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  const auto np = static_cast<std::size_t>(a.points().size());
  if (int c = std::memcmp(a.points().data(), b.points().data(), np * sizeof(double)); c != 0) return c < 0;
  const auto nw = static_cast<std::size_t>(a.weights().size());
  return std::memcmp(a.weights().data(), b.weights().data(), nw * sizeof(double)) < 0;
}

double cross_sum(const DiscreteMeasure& a, const DiscreteMeasure& b, const RadialKernel& k) {
  const auto n = static_cast<std::size_t>(a.size());
  std::vector<double> rows(n);
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> terms(static_cast<std::size_t>(b.size()));
    for (std::size_t i = lo; i < hi; ++i) {
      const auto x = a.points().col(static_cast<Eigen::Index>(i));
      for (int j = 0; j < b.size(); ++j) terms[j] = b.weights()(j) * k.eval((x - b.points().col(j)).norm());
      rows[i] = a.weights()(static_cast<Eigen::Index>(i)) * pairwise_sum(terms);
    }
  });
  return pairwise_sum(rows);
}

struct Support {
  std::vector<std::size_t> cells;
  std::vector<double> values;
};

Support support_of(const GridDensity& f) {
  Support s;
  for (std::size_t c = 0; c < f.values().size(); ++c)
    if (f.values()[c] > 0.0) {
      s.cells.push_back(c);
      s.values.push_back(f.values()[c]);
    }
  return s;
}

}  // namespace

double ELReport::max_violation() const {
  if (kind == Kind::Measure) return std::max(viol_support, viol_off);
  return std::max({viol_interior, viol_zero, viol_one});
}

std::string to_string(DiameterVariant v) { return v == DiameterVariant::General ? "general" : "locally_bounded"; }

double energy_cross_discrete(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, const RadialKernel& k) {
  if (mu1.dim() != mu2.dim()) throw DimensionMismatch("energy_cross_discrete: dimension mismatch");
  return canonical_less(mu2, mu1) ? cross_sum(mu2, mu1, k) : cross_sum(mu1, mu2, k);
}

double energy_discrete(const DiscreteMeasure& mu, const RadialKernel& k) { return cross_sum(mu, mu, k); }

std::vector<double> density_potential(const GridDensity& f, const RadialKernel& k) {
  const GridSpec& g = f.grid();
  const int N = g.dim();
  const double h = g.spacing;
  // Kernel table over all cell offsets, offset o stored at sum (o_a + n_a - 1) * stride_a.
  std::vector<std::size_t> stride(N);
  std::size_t table_size = 1;
  for (int a = N - 1; a >= 0; --a) {
    stride[a] = table_size;
    table_size *= static_cast<std::size_t>(2 * g.dims[a] - 1);
  }
  std::vector<double> table(table_size);
  parallel_for(table_size, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      std::size_t rem = t;
      double r2 = 0.0;
      for (int a = 0; a < N; ++a) {
        const auto o = static_cast<double>(rem / stride[a]) - (g.dims[a] - 1);
        rem %= stride[a];
        r2 += o * o;
      }
      table[t] = k.eval(h * std::sqrt(r2));
    }
  });
  auto position = [&](std::size_t cell) {
    const auto idx = g.multi_index(cell);
    std::size_t p = 0;
    for (int a = 0; a < N; ++a) p += static_cast<std::size_t>(idx[a]) * stride[a];
    return p;
  };
  std::size_t centre = 0;
  for (int a = 0; a < N; ++a) centre += static_cast<std::size_t>(g.dims[a] - 1) * stride[a];
  const Support s = support_of(f);
  std::vector<std::size_t> base(s.cells.size());
  for (std::size_t i = 0; i < s.cells.size(); ++i) base[i] = centre - position(s.cells[i]);
  const double vol = g.cell_volume();
  std::vector<double> psi(g.cell_count());
  parallel_for(psi.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      const std::size_t pc = position(c);
      double acc = 0.0;
      for (std::size_t i = 0; i < base.size(); ++i) acc += s.values[i] * table[base[i] + pc];
      psi[c] = acc * vol;
    }
  });
  return psi;
}

double energy_density(const GridDensity& f, const RadialKernel& k) {
  const auto psi = density_potential(f, k);
  std::vector<double> terms;
  for (std::size_t c = 0; c < psi.size(); ++c)
    if (f.values()[c] > 0.0) terms.push_back(f.values()[c] * psi[c]);
  return pairwise_sum(terms) * f.grid().cell_volume();
}

double energy_cross_density(const GridDensity& f1, const GridDensity& f2, const RadialKernel& k) {
  if (f1.dim() != f2.dim()) throw DimensionMismatch("energy_cross_density: dimension mismatch");
  const Support s1 = support_of(f1), s2 = support_of(f2);
  PointSet x2(f2.dim(), static_cast<Eigen::Index>(s2.cells.size()));
  for (std::size_t j = 0; j < s2.cells.size(); ++j) x2.col(static_cast<Eigen::Index>(j)) = f2.grid().cell_center(s2.cells[j]);
  std::vector<double> rows(s1.cells.size());
  parallel_for(rows.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<double> terms(s2.cells.size());
    for (std::size_t i = lo; i < hi; ++i) {
      const Eigen::VectorXd x = f1.grid().cell_center(s1.cells[i]);
      for (std::size_t j = 0; j < terms.size(); ++j)
        terms[j] = s2.values[j] * k.eval((x - x2.col(static_cast<Eigen::Index>(j))).norm());
      rows[i] = s1.values[i] * pairwise_sum(terms);
    }
  });
  return pairwise_sum(rows) * f1.grid().cell_volume() * f2.grid().cell_volume();
}

double potential_at(const DiscreteMeasure& mu, const RadialKernel& k, const Eigen::VectorXd& x) {
  if (x.size() != mu.dim()) throw DimensionMismatch("potential_at: dimension mismatch");
  std::vector<double> terms(static_cast<std::size_t>(mu.size()));
  for (int j = 0; j < mu.size(); ++j) terms[j] = mu.weights()(j) * k.eval((x - mu.points().col(j)).norm());
  return pairwise_sum(terms);
}

double potential_at(const GridDensity& f, const RadialKernel& k, const Eigen::VectorXd& x) {
  if (x.size() != f.dim()) throw DimensionMismatch("potential_at: dimension mismatch");
  std::vector<double> terms;
  for (std::size_t c = 0; c < f.values().size(); ++c)
    if (f.values()[c] > 0.0) terms.push_back(f.values()[c] * k.eval((x - f.grid().cell_center(c)).norm()));
  return pairwise_sum(terms) * f.grid().cell_volume();
}

Eigen::VectorXd potential_grad(const DiscreteMeasure& mu, const RadialKernel& k, const Eigen::VectorXd& x) {
  if (x.size() != mu.dim()) throw DimensionMismatch("potential_grad: dimension mismatch");
  if (!k.has_d1()) throw RegularityError("potential_grad: kernel has no first derivative");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(mu.dim());
  for (int j = 0; j < mu.size(); ++j) {
    const Eigen::VectorXd d = x - mu.points().col(j);
    const double r = d.norm();
    if (r == 0.0) {
      if (std::abs(k.d1(0.0)) > 1e-14) throw SingularPoint("potential_grad: x coincides with an atom and g'(0) != 0");
      continue;
    }
    grad += mu.weights()(j) * k.d1(r) / r * d;
  }
  return grad;
}

Eigen::MatrixXd potential_hessian(const DiscreteMeasure& mu, const RadialKernel& k, const Eigen::VectorXd& x) {
  if (x.size() != mu.dim()) throw DimensionMismatch("potential_hessian: dimension mismatch");
  if (!k.has_d2()) throw RegularityError("potential_hessian: kernel has no second derivative");
  const int N = mu.dim();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
  for (int j = 0; j < mu.size(); ++j) {
    const Eigen::VectorXd d = x - mu.points().col(j);
    const double r = d.norm();
    const double w = mu.weights()(j);
    if (r == 0.0) {
      if (std::abs(k.d1(0.0)) > 1e-14) throw SingularPoint("potential_hessian: x coincides with an atom and g'(0) != 0");
      H.diagonal().array() += w * k.d2(0.0);
      continue;
    }
    const Eigen::VectorXd u = d / r;
    const double radial = k.d2(r), tangential = k.d1(r) / r;
    H += w * (radial * (u * u.transpose()) + tangential * (Eigen::MatrixXd::Identity(N, N) - u * u.transpose()));
  }
  return H;
}

PositiveDirection hessian_positive_direction(const DiscreteMeasure& mu, const RadialKernel& k,
                                             const Eigen::VectorXd& x) {
  const Eigen::MatrixXd H = potential_hessian(mu, k, x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const auto top = H.rows() - 1;
  return {es.eigenvectors().col(top), es.eigenvalues()(top)};
}

namespace {

struct AngularRule {
  std::vector<double> cos_theta;
  std::vector<double> weight;  // normalised to sum 1
};

AngularRule angular_rule(int N, int n_quad) {
  if (n_quad < 1) throw InvalidArgument("radial_reduced_kernel: n_quad must be >= 1");
  const QuadratureRule q = gauss_legendre(n_quad, 0.0, std::numbers::pi);
  AngularRule a;
  double total = 0.0;
  for (int i = 0; i < n_quad; ++i) {
    const double w = q.weights[i] * std::pow(std::sin(q.nodes[i]), N - 2);
    a.cos_theta.push_back(std::cos(q.nodes[i]));
    a.weight.push_back(w);
    total += w;
  }
  for (double& w : a.weight) w /= total;
  return a;
}

double reduced(const RadialKernel& k, int N, const AngularRule& a, double r, double s) {
  if (N == 1) return 0.5 * (k.eval(std::abs(r - s)) + k.eval(r + s));
  const double sq = r * r + s * s, rs = 2.0 * (r * s);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.weight.size(); ++i) acc += a.weight[i] * k.eval(std::sqrt(std::max(0.0, sq - rs * a.cos_theta[i])));
  return acc;
}

}  // namespace

double radial_reduced_kernel(const RadialKernel& k, int N, double r, double s, int n_quad) {
  if (N < 1) throw InvalidArgument("radial_reduced_kernel: dimension must be >= 1");
  if (!(r >= 0.0 && s >= 0.0)) throw InvalidArgument("radial_reduced_kernel: radii must be >= 0");
  if (N == 1) return 0.5 * (k.eval(std::abs(r - s)) + k.eval(r + s));
  return reduced(k, N, angular_rule(N, n_quad), r, s);
}

Eigen::MatrixXd radial_kernel_matrix(const RadialKernel& k, int N, double dr, int n, int n_quad) {
  if (N < 1 || n < 1 || !(dr > 0.0)) throw InvalidArgument("radial_kernel_matrix: invalid shell grid");
  const AngularRule a = N == 1 ? AngularRule{} : angular_rule(N, n_quad);
  Eigen::MatrixXd G(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j)
      for (std::size_t l = j; l < static_cast<std::size_t>(n); ++l) {
        const double v = reduced(k, N, a, (j + 0.5) * dr, (l + 0.5) * dr);
        G(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = v;
        G(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) = v;
      }
  });
  return G;
}

double energy_radial(const RadialProfile& p, const Eigen::MatrixXd& G) {
  if (G.rows() != p.shells() || G.cols() != p.shells()) throw DimensionMismatch("energy_radial: matrix size mismatch");
  const auto w = p.shell_weights();
  Eigen::VectorXd u(p.shells());
  for (int j = 0; j < p.shells(); ++j) u(j) = p.values()[j] * w[j];
  std::vector<double> rows(static_cast<std::size_t>(p.shells()));
  for (int j = 0; j < p.shells(); ++j) rows[j] = u(j) == 0.0 ? 0.0 : u(j) * G.row(j).dot(u);
  return pairwise_sum(rows);
}

double energy_radial(const RadialProfile& p, const RadialKernel& k, int n_quad) {
  return energy_radial(p, radial_kernel_matrix(k, p.dim(), p.dr(), p.shells(), n_quad));
}

namespace {

ELReport el_from_values(std::span<const double> f, std::span<const double> mass_w, std::span<const double> psi,
                        double tau) {
  if (!(tau > 0.0 && tau < 0.5)) throw InvalidArgument("el_residual: tau must lie in (0, 1/2)");
  ELReport r;
  r.kind = ELReport::Kind::Density;
  r.tau = tau;
  double num = 0.0, den = 0.0, max_one = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < f.size(); ++c) {
    if (f[c] > tau && f[c] < 1.0 - tau) {
      num += f[c] * mass_w[c] * psi[c];
      den += f[c] * mass_w[c];
      ++r.n_interior;
    } else if (f[c] >= 1.0 - tau) {
      max_one = std::max(max_one, psi[c]);
    }
  }
  if (den > 0.0) {
    r.lambda_hat = num / den;
  } else if (std::isfinite(max_one)) {
    r.lambda_hat = max_one;
  } else {
    // Every cell is below tau: fall back to the mean over the positive part.
    for (std::size_t c = 0; c < f.size(); ++c) num += f[c] * mass_w[c] * psi[c], den += f[c] * mass_w[c];
    r.lambda_hat = den > 0.0 ? num / den : 0.0;
  }
  for (std::size_t c = 0; c < f.size(); ++c) {
    const double d = psi[c] - r.lambda_hat;
    if (f[c] > tau && f[c] < 1.0 - tau) r.viol_interior = std::max(r.viol_interior, std::abs(d));
    else if (f[c] <= tau) r.viol_zero = std::max(r.viol_zero, -d);
    else r.viol_one = std::max(r.viol_one, d);
  }
  return r;
}

}  // namespace

ELReport el_residual_density(const GridDensity& f, const std::vector<double>& psi, double tau) {
  if (psi.size() != f.values().size()) throw DimensionMismatch("el_residual_density: potential size mismatch");
  std::vector<double> vol(psi.size(), f.grid().cell_volume());
  return el_from_values(f.values(), vol, psi, tau);
}

ELReport el_residual_density(const GridDensity& f, const RadialKernel& k, double tau) {
  return el_residual_density(f, density_potential(f, k), tau);
}

ELReport el_residual_radial(const RadialProfile& p, const Eigen::MatrixXd& G, double tau) {
  if (G.rows() != p.shells()) throw DimensionMismatch("el_residual_radial: matrix size mismatch");
  const auto w = p.shell_weights();
  Eigen::VectorXd u(p.shells());
  for (int j = 0; j < p.shells(); ++j) u(j) = p.values()[j] * w[j];
  const Eigen::VectorXd psi = G * u;
  return el_from_values(p.values(), w, std::span<const double>(psi.data(), static_cast<std::size_t>(psi.size())), tau);
}

ELReport el_residual_measure(const DiscreteMeasure& mu, const RadialKernel& k, const std::optional<PointSet>& probes,
                             double probe_exclusion) {
  const double M = mu.total_mass();
  if (!(M > 0.0)) throw ZeroMass("el_residual_measure: measure has zero mass");
  ELReport r;
  r.kind = ELReport::Kind::Measure;
  r.lambda_hat = energy_discrete(mu, k) / M;
  for (int i = 0; i < mu.size(); ++i)
    if (mu.weights()(i) > 0.0)
      r.viol_support = std::max(r.viol_support, std::abs(potential_at(mu, k, mu.points().col(i)) - r.lambda_hat));

  PointSet P;
  if (probes) {
    if (probes->rows() != mu.dim()) throw DimensionMismatch("el_residual_measure: probe dimension mismatch");
    P = *probes;
  } else {
    const Eigen::VectorXd lo = mu.points().rowwise().minCoeff().array() - 1.0;
    const Eigen::VectorXd hi = mu.points().rowwise().maxCoeff().array() + 1.0;
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Eigen::VectorXd> kept;
    for (int tries = 0; tries < 200000 && kept.size() < 2000; ++tries) {
      Eigen::VectorXd x(mu.dim());
      for (int a = 0; a < mu.dim(); ++a) x(a) = lo(a) + (hi(a) - lo(a)) * U(rng);
      bool far = true;
      for (int i = 0; i < mu.size() && far; ++i)
        if (mu.weights()(i) > 0.0 && (x - mu.points().col(i)).norm() < probe_exclusion) far = false;
      if (far) kept.push_back(std::move(x));
    }
    P.resize(mu.dim(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) P.col(static_cast<Eigen::Index>(i)) = kept[i];
  }
  r.n_probes = static_cast<int>(P.cols());
  std::vector<double> gap(static_cast<std::size_t>(P.cols()));
  parallel_for(gap.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      gap[p] = potential_at(mu, k, P.col(static_cast<Eigen::Index>(p))) - r.lambda_hat;
  });
  r.off_margin = gap.empty() ? 0.0 : *std::min_element(gap.begin(), gap.end());
  r.viol_off = std::max(0.0, -r.off_margin);
  return r;
}

double cap_fraction(int N, double theta) {
  if (N < 1) throw InvalidArgument("cap_fraction: dimension must be >= 1");
  if (N == 1) return 0.5;
  if (N == 2) return theta / std::numbers::pi;
  const QuadratureRule cap = gauss_legendre(64, 0.0, theta);
  const QuadratureRule full = gauss_legendre(256, 0.0, std::numbers::pi);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < cap.nodes.size(); ++i) a += cap.weights[i] * std::pow(std::sin(cap.nodes[i]), N - 2);
  for (std::size_t i = 0; i < full.nodes.size(); ++i) b += full.weights[i] * std::pow(std::sin(full.nodes[i]), N - 2);
  return a / b;
}

double diameter_kappa(int N) {
  return 1.0 / (cap_fraction(N, std::numbers::pi / 15.0) * (std::pow(5.0, N) - std::pow(4.0, N)));
}

DiameterBoundReport diameter_bound(const RadialKernel& k, double m, DiameterVariant variant,
                                   const DiameterBoundOptions& opts) {
  if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("diameter_bound: mass must be positive");
  const int N = opts.dim;
  if (N < 1) throw InvalidArgument("diameter_bound: dimension must be >= 1");
  if (!(opts.ratio > 1.0) || !(opts.cap > 0.0)) throw InvalidArgument("diameter_bound: invalid search grid");
  if (!k.grows_at_infinity()) throw HypothesisError("diameter_bound: kernel is not declared to grow at infinity");
  const auto r_bar = check_definitively_nondecreasing(k, opts.monotone_t_max, opts.monotone_samples);
  if (!r_bar) throw HypothesisError("diameter_bound: no monotonicity certificate on the sampled range");

  double lb = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opts.monotone_samples; ++i)
    lb = std::min(lb, k.eval(*r_bar * i / (opts.monotone_samples - 1.0)));
  if (k.lower_bound()) lb = std::min(lb, *k.lower_bound());
  const RadialKernel gt = k.shifted(-lb);

  DiameterBoundReport rep;
  rep.variant = variant;
  rep.R_bar = *r_bar;
  rep.g_shift = lb;
  rep.kappa = diameter_kappa(N);
  const double omega = unit_ball_volume(N);
  const double r_ball = std::pow(m / omega, 1.0 / N);
  rep.C_m = energy_radial(RadialProfile(N, r_ball / opts.n_shells, std::vector<double>(opts.n_shells, 1.0)), gt,
                          opts.n_quad);

  const double threshold = 5.0 * rep.C_m / (m * m);
  std::optional<double> R;
  for (double r = std::max(*r_bar, 1e-6); r <= opts.cap; r *= opts.ratio)
    if (omega * std::pow(r, N) > rep.kappa * m && gt.eval(r) > threshold) {
      R = r;
      break;
    }
  if (!R) throw SearchHorizonError("diameter_bound: no admissible R below the search cap");
  rep.R = *R;

  double rhs = 2.0 * gt.eval(6.0 * rep.R);
  if (variant == DiameterVariant::LocallyBounded) {
    rhs += gt.eval(11.0 * rep.R);
  } else {
    double integral = 0.0;
    const int panels = 64;
    const double width = 11.0 * rep.R / panels;
    for (int p = 0; p < panels; ++p) {
      const QuadratureRule q = gauss_legendre(16, p * width, (p + 1) * width);
      for (std::size_t i = 0; i < q.nodes.size(); ++i)
        integral += q.weights[i] * gt.eval(q.nodes[i]) * std::pow(q.nodes[i], N - 1);
    }
    rhs += 5.0 / (2.0 * m) * N * omega * integral;
  }
  std::optional<double> Rp;
  for (double r = 50.0 * rep.R; r <= opts.cap; r *= opts.ratio)
    if (gt.eval(r - rep.R) >= rhs) {
      Rp = r;
      break;
    }
  if (!Rp) throw SearchHorizonError("diameter_bound: no admissible R+ below the search cap");
  rep.R_plus = *Rp;
  rep.D = 2.0 * rep.R_plus;
  return rep;
}

}  // namespace nlmin
