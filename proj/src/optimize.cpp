#include "nlmin/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "nlmin/errors.hpp"
#include "nlmin/parallel.hpp"
#include "nlmin/quadrature.hpp"

namespace nlmin {

void OptimizeOptions::validate() const {
  if (max_iters < 1) throw InvalidArgument("OptimizeOptions: max_iters must be >= 1");
  if (!(grad_tol > 0.0)) throw InvalidArgument("OptimizeOptions: grad_tol must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidArgument("OptimizeOptions: backtrack must lie in (0, 1)");
  if (!(merge_radius >= 0.0)) throw InvalidArgument("OptimizeOptions: merge_radius must be >= 0");
  if (log_every < 1) throw InvalidArgument("OptimizeOptions: log_every must be >= 1");
  if (!(perturbation >= 0.0 && perturbation < 1.0)) throw InvalidArgument("OptimizeOptions: perturbation must lie in [0, 1)");
}

OptimizeOptions OptimizeOptions::for_density(double m) {
  OptimizeOptions o;
  o.grad_tol = 1e-7 * m;
  return o;
}

void OptimizeTrace::log(int iter, double energy, double grad_norm) {
  iters.push_back(iter);
  energies.push_back(energy);
  grad_norms.push_back(grad_norm);
}

bool OptimizeTrace::non_increasing(double rel_tol) const {
  for (std::size_t i = 1; i < energies.size(); ++i)
    if (energies[i] > energies[i - 1] + rel_tol * std::max(1.0, std::abs(energies[i - 1]))) return false;
  return true;
}

std::string OptimizeTrace::to_csv() const {
  std::ostringstream os;
  os << "iter,energy,grad_norm\n" << std::setprecision(17);
  for (std::size_t i = 0; i < energies.size(); ++i) os << iters[i] << ',' << energies[i] << ',' << grad_norms[i] << '\n';
  return os.str();
}

namespace {

constexpr double kArmijo = 1e-4;

// Newton step for min x.Qx restricted to a free set, keeping c.x fixed and
// lo <= x <= hi. Returns the full direction and the largest feasible length.
struct NewtonStep {
  Eigen::VectorXd d;
  double t = 1.0;
  int blocking = -1;
  bool to_upper = false;
  double predicted = 0.0;
};

std::optional<NewtonStep> free_set_newton(const Eigen::MatrixXd& Q, const Eigen::VectorXd& grad,
                                          const Eigen::VectorXd& c, const Eigen::VectorXd& x, double hi) {
  const auto n = Q.rows();
  if (n < 2) return std::nullopt;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 1, n + 1);
  K.topLeftCorner(n, n) = 2.0 * Q;
  K.block(0, n, n, 1) = c;
  K.block(n, 0, 1, n) = c.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs.head(n) = -grad;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite() || (K * sol - rhs).norm() > 1e-8 * (rhs.norm() + 1e-300)) return std::nullopt;
  NewtonStep s;
  s.d = sol.head(n);
  const double slope = grad.dot(s.d), curv = s.d.dot(Q * s.d);
  if (!(slope < 0.0) || !(curv > 0.0)) return std::nullopt;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.d(i) < 0.0 && -x(i) / s.d(i) < s.t) s.t = -x(i) / s.d(i), s.blocking = static_cast<int>(i), s.to_upper = false;
    if (s.d(i) > 0.0 && (hi - x(i)) / s.d(i) < s.t) s.t = (hi - x(i)) / s.d(i), s.blocking = static_cast<int>(i), s.to_upper = true;
  }
  s.t = std::max(0.0, s.t);
  s.predicted = s.t * slope + s.t * s.t * curv;
  return s;
}

// ---- particles ---------------------------------------------------------------

struct ParticleEval {
  double energy = 0.0;
  Eigen::MatrixXd force;  // column i: sum_j w_j g'(r_ij) (x_i - x_j)/r_ij
};

double particle_energy(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, const RadialKernel& k) {
  const auto n = static_cast<std::size_t>(X.cols());
  std::vector<double> rows(n);
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> t(n);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto xi = X.col(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < n; ++j) t[j] = w(static_cast<Eigen::Index>(j)) * k.eval((xi - X.col(static_cast<Eigen::Index>(j))).norm());
      rows[i] = w(static_cast<Eigen::Index>(i)) * pairwise_sum(t);
    }
  });
  return pairwise_sum(rows);
}

ParticleEval particle_eval(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, const RadialKernel& k) {
  ParticleEval ev;
  ev.energy = particle_energy(X, w, k);
  const auto n = X.cols();
  ev.force = Eigen::MatrixXd::Zero(X.rows(), n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t lo, std::size_t hi) {
    for (auto i = static_cast<Eigen::Index>(lo); i < static_cast<Eigen::Index>(hi); ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const Eigen::VectorXd d = X.col(i) - X.col(j);
        const double r = d.norm();
        if (r == 0.0) continue;
        ev.force.col(i) += w(j) * k.d1(r) / r * d;
      }
  });
  return ev;
}

double grad_norm(const ParticleEval& ev, const Eigen::VectorXd& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) s += 4.0 * w(i) * w(i) * ev.force.col(i).squaredNorm();
  return std::sqrt(s);
}

double lipschitz_estimate(const RadialKernel& k, double t_max) {
  double L = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double t = t_max * i / 200.0;
    L = std::max(L, k.has_d2() ? std::abs(k.d2(t)) : 0.0);
  }
  if (!k.has_d2() || L == 0.0) {
    // Difference quotients of g'.
    for (int i = 0; i < 200; ++i) {
      const double a = t_max * i / 200.0, b = t_max * (i + 1) / 200.0;
      L = std::max(L, std::abs(k.d1(b) - k.d1(a)) / (b - a));
    }
  }
  return std::max(L, 1e-12);
}

double diameter_of(const Eigen::MatrixXd& X) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < X.cols(); ++i)
    for (Eigen::Index j = i + 1; j < X.cols(); ++j) d = std::max(d, (X.col(i) - X.col(j)).norm());
  return d;
}

struct DescentState {
  Eigen::MatrixXd X;
  Eigen::VectorXd w;
  double step = 0.0;
  int successes = 0;
};

// Preconditioned gradient descent x_i <- x_i - step * grad_i E / w_i with Armijo backtracking.
bool particle_descent(DescentState& s, const RadialKernel& k, const OptimizeOptions& opts, int budget, int& iter,
                      OptimizeTrace& trace) {
  ParticleEval ev = particle_eval(s.X, s.w, k);
  for (int local = 0; local < budget; ++local) {
    const double gn = grad_norm(ev, s.w);
    trace.final_grad_norm = gn;
    if (gn <= opts.grad_tol) return true;
    const Eigen::MatrixXd dir = -2.0 * ev.force;
    double decrease = 0.0;
    for (Eigen::Index i = 0; i < s.w.size(); ++i) decrease += s.w(i) * dir.col(i).squaredNorm();
    bool accepted = false;
    while (!accepted) {
      const Eigen::MatrixXd Xt = s.X + s.step * dir;
      const double Et = particle_energy(Xt, s.w, k);
      if (Et <= ev.energy - kArmijo * s.step * decrease) {
        s.X = Xt;
        accepted = true;
        if (++s.successes >= 5) s.step *= 2.0, s.successes = 0;
      } else {
        s.step *= opts.backtrack;
        s.successes = 0;
        if (s.step < 1e-30) {
          trace.reason = "step underflow";
          return false;
        }
      }
    }
    ev = particle_eval(s.X, s.w, k);
    ++iter;
    if (iter % opts.log_every == 0) trace.log(iter, ev.energy, grad_norm(ev, s.w));
  }
  trace.final_grad_norm = grad_norm(ev, s.w);
  return trace.final_grad_norm <= opts.grad_tol;
}

DiscreteMeasure to_measure(const DescentState& s) { return DiscreteMeasure(s.X, s.w); }

}  // namespace

// ---- weights -----------------------------------------------------------------

DiscreteMeasure polish_weights(const DiscreteMeasure& mu, const RadialKernel& k, int max_iters) {
  const int n = mu.size();
  if (n == 0) throw InvalidArgument("polish_weights: empty measure");
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) G(i, j) = G(j, i) = k.eval((mu.points().col(i) - mu.points().col(j)).norm());
  Eigen::VectorXd w = mu.weights() / mu.total_mass();
  double E = w.dot(G * w);
  double step = 1.0 / std::max(1e-12, G.cwiseAbs().rowwise().sum().maxCoeff());
  const std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd p = G * w;
    const double lam = E;
    double kkt = 0.0;
    std::vector<int> S;
    for (int i = 0; i < n; ++i) {
      if (w(i) > 0.0) S.push_back(i), kkt = std::max(kkt, std::abs(p(i) - lam));
      else kkt = std::max(kkt, lam - p(i));
    }
    if (kkt <= 1e-15 * std::max(1.0, std::abs(lam))) break;
    bool improved = false;
    if (S.size() >= 2 && S.size() <= 2000) {
      const auto s = static_cast<Eigen::Index>(S.size());
      Eigen::MatrixXd Q(s, s);
      Eigen::VectorXd g(s), x(s);
      for (Eigen::Index a = 0; a < s; ++a) {
        g(a) = 2.0 * p(S[a]);
        x(a) = w(S[a]);
        for (Eigen::Index b = 0; b < s; ++b) Q(a, b) = G(S[a], S[b]);
      }
      if (auto st = free_set_newton(Q, g, Eigen::VectorXd::Ones(s), x, std::numeric_limits<double>::infinity())) {
        Eigen::VectorXd wt = w;
        for (Eigen::Index a = 0; a < s; ++a) wt(S[a]) = std::max(0.0, x(a) + st->t * st->d(a));
        if (st->blocking >= 0) wt(S[st->blocking]) = 0.0;
        wt /= wt.sum();
        const double Et = wt.dot(G * wt);
        if (Et <= E) {
          improved = Et < E || st->blocking >= 0;
          w = wt;
          E = Et;
        }
      }
    }
    if (!improved) {
      // Projected gradient with sufficient decrease.
      for (int bt = 0; bt < 60; ++bt) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) v[i] = w(i) - step * 2.0 * p(i);
        const auto proj = project_box_mass_weighted(v, ones, 1.0);
        Eigen::VectorXd wt = Eigen::Map<const Eigen::VectorXd>(proj.data(), n);
        const double Et = wt.dot(G * wt);
        const double moved = (wt - w).squaredNorm();
        if (moved == 0.0) break;
        if (Et <= E - kArmijo / step * moved) {
          w = wt;
          E = Et;
          improved = true;
          step *= 2.0;
          break;
        }
        step *= 0.5;
      }
    }
    if (!improved) break;
  }
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (w(i) > 0.0) keep.push_back(i);
  PointSet X(mu.dim(), static_cast<Eigen::Index>(keep.size()));
  Eigen::VectorXd wk(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t a = 0; a < keep.size(); ++a) X.col(static_cast<Eigen::Index>(a)) = mu.points().col(keep[a]), wk(static_cast<Eigen::Index>(a)) = w(keep[a]);
  return DiscreteMeasure(std::move(X), wk * (mu.total_mass() / wk.sum()));
}

DiscreteMeasure merge_close_atoms(const DiscreteMeasure& mu, const RadialKernel& k, double radius) {
  if (radius <= 0.0 || mu.size() < 2) return mu;
  const ClusterReport rep = cluster_support(mu.points(), mu.weights(), radius);
  if (static_cast<int>(rep.clusters.size()) == mu.size()) return mu;
  PointSet X(mu.dim(), static_cast<Eigen::Index>(rep.clusters.size()));
  Eigen::VectorXd w(static_cast<Eigen::Index>(rep.clusters.size()));
  for (std::size_t c = 0; c < rep.clusters.size(); ++c) {
    X.col(static_cast<Eigen::Index>(c)) = rep.clusters[c].center;
    w(static_cast<Eigen::Index>(c)) = rep.clusters[c].mass;
  }
  DiscreteMeasure merged(std::move(X), std::move(w));
  const double before = energy_discrete(mu, k), after = energy_discrete(merged, k);
  if (after > before + 1e-14 * std::max(1.0, std::abs(before))) return mu;
  return merged;
}

// ---- measures ----------------------------------------------------------------

DiscreteMeasure perturbed_simplex(int N, double perturbation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> Z(0.0, 1.0);
  PointSet X = build_simplex(N).vertices;
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) += perturbation * Z(rng);
  return DiscreteMeasure::uniform(std::move(X));
}

MeasureResult minimize_measure(const RadialKernel& k, int N, int n_particles, const OptimizeOptions& opts,
                               const std::optional<DiscreteMeasure>& init) {
  opts.validate();
  if (N < 1) throw InvalidArgument("minimize_measure: dimension must be >= 1");
  if (!k.grows_at_infinity()) throw HypothesisError("minimize_measure: kernel must grow at infinity");
  if (!k.has_d1()) throw RegularityError("minimize_measure: kernel needs a first derivative");
  DescentState s;
  if (init) {
    if (init->dim() != N) throw DimensionMismatch("minimize_measure: init dimension mismatch");
    s.X = init->points();
    s.w = init->weights() / init->total_mass();
  } else {
    if (n_particles < N + 1) throw InvalidArgument("minimize_measure: need at least N+1 particles");
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> Z(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    s.X.resize(N, n_particles);
    for (int i = 0; i < n_particles; ++i) {
      Eigen::VectorXd v(N);
      for (int a = 0; a < N; ++a) v(a) = Z(rng);
      s.X.col(i) = v.normalized() * std::pow(U(rng), 1.0 / N);
    }
    s.w = Eigen::VectorXd::Constant(n_particles, 1.0 / n_particles);
  }
  s.step = opts.step_init > 0.0 ? opts.step_init : 0.1 / lipschitz_estimate(k, std::max(1.0, 2.0 * diameter_of(s.X)));

  OptimizeTrace trace;
  int iter = 0;
  trace.log(0, particle_energy(s.X, s.w, k), grad_norm(particle_eval(s.X, s.w, k), s.w));
  bool converged = particle_descent(s, k, opts, std::max(1, opts.max_iters / 2), iter, trace);
  int stalls = 0;
  while (trace.reason.empty()) {
    DiscreteMeasure mu = merge_close_atoms(to_measure(s), k, opts.merge_radius);
    if (opts.weight_polish) mu = polish_weights(mu, k);
    const bool changed = mu.size() != s.X.cols() || (mu.weights() - s.w).norm() > 0.0;
    s.X = mu.points();
    s.w = mu.weights();
    trace.log(iter, particle_energy(s.X, s.w, k), grad_norm(particle_eval(s.X, s.w, k), s.w));
    if (converged && !changed) break;
    if (converged && ++stalls > 50) break;
    if (iter >= opts.max_iters) break;
    converged = particle_descent(s, k, opts, std::min(1000, opts.max_iters - iter), iter, trace);
    if (iter >= opts.max_iters && !converged) {
      DiscreteMeasure last = merge_close_atoms(to_measure(s), k, opts.merge_radius);
      if (opts.weight_polish) last = polish_weights(last, k);
      s.X = last.points();
      s.w = last.weights();
      break;
    }
  }
  const ParticleEval ev = particle_eval(s.X, s.w, k);
  trace.final_grad_norm = grad_norm(ev, s.w);
  trace.iterations = iter;
  trace.log(iter, ev.energy, trace.final_grad_norm);
  if (trace.reason.empty()) trace.reason = trace.final_grad_norm <= opts.grad_tol ? "converged" : "max_iters";
  return {to_measure(s), trace};
}

MeasureResult minimize_measure_multistart(const RadialKernel& k, int N, int n_particles, const OptimizeOptions& opts,
                                          int n_seeds) {
  if (n_seeds < 1) throw InvalidArgument("minimize_measure_multistart: need at least one seed");
  std::optional<MeasureResult> best;
  for (int s = 0; s < n_seeds; ++s) {
    OptimizeOptions o = opts;
    o.seed = opts.seed + static_cast<std::uint64_t>(s);
    MeasureResult r = minimize_measure(k, N, n_particles, o);
    if (!best || r.trace.energies.back() < best->trace.energies.back()) best = std::move(r);
  }
  return std::move(*best);
}

// ---- weighted box projected gradient (densities and radial profiles) --------

namespace {

// Minimises the quadratic energy E(f) = (f*vol).A.(f*vol) over 0<=f<=1,
// sum f*vol = m. `potential` returns psi = A (f*vol).
template <class Potential, class Block>
OptimizeTrace box_projected_gradient(std::vector<double>& f, const std::vector<double>& vol, double m,
                                     const OptimizeOptions& opts, double lipschitz, Potential potential, Block block) {
  OptimizeTrace trace;
  const std::size_t n = f.size();
  auto energy_of = [&](const std::vector<double>& x, const std::vector<double>& psi) {
    std::vector<double> t(n);
    for (std::size_t c = 0; c < n; ++c) t[c] = x[c] * vol[c] * psi[c];
    return pairwise_sum(t);
  };
  std::vector<double> psi = potential(f);
  double E = energy_of(f, psi);
  double step = opts.step_init > 0.0 ? opts.step_init : 0.1 / std::max(lipschitz, 1e-300);
  int successes = 0, stable = 0;
  std::vector<int> prev_state(n, -1);
  trace.log(0, E, std::numeric_limits<double>::quiet_NaN());
  auto residual = [&](double s) {
    std::vector<double> v(n);
    for (std::size_t c = 0; c < n; ++c) v[c] = f[c] - s * 2.0 * psi[c];
    const auto p = project_box_mass_weighted(v, vol, m);
    double r = 0.0;
    for (std::size_t c = 0; c < n; ++c) r = std::max(r, std::abs(p[c] - f[c]));
    return r / s;
  };
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const double res = residual(step);
    trace.final_grad_norm = res;
    if (res <= opts.grad_tol) {
      trace.reason = "converged";
      break;
    }
    // Free-set Newton once the active set has settled.
    std::vector<int> state(n);
    std::vector<std::size_t> free;
    for (std::size_t c = 0; c < n; ++c) {
      state[c] = f[c] <= 0.0 ? 0 : (f[c] >= 1.0 ? 2 : 1);
      if (state[c] == 1) free.push_back(c);
    }
    stable = state == prev_state ? stable + 1 : 0;
    prev_state = state;
    bool accepted = false;
    if (stable >= 2 && free.size() >= 2 && free.size() <= 600) {
      const auto s = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd Q = block(free);
      Eigen::VectorXd g(s), x(s), c(s);
      for (Eigen::Index a = 0; a < s; ++a) {
        const std::size_t i = free[a];
        Q.row(a) *= vol[i];
        Q.col(a) *= vol[i];
        g(a) = 2.0 * vol[i] * psi[i];
        x(a) = f[i];
        c(a) = vol[i];
      }
      if (auto st = free_set_newton(Q, g, c, x, 1.0)) {
        std::vector<double> ft = f;
        for (Eigen::Index a = 0; a < s; ++a) ft[free[a]] = std::clamp(x(a) + st->t * st->d(a), 0.0, 1.0);
        if (st->blocking >= 0) ft[free[st->blocking]] = st->to_upper ? 1.0 : 0.0;
        // Restore the mass exactly on the remaining free cells.
        const auto fixed = project_box_mass_weighted(ft, vol, m);
        auto psit = potential(fixed);
        const double Et = energy_of(fixed, psit);
        if (Et < E) {
          f = fixed;
          psi = std::move(psit);
          E = Et;
          accepted = true;
        }
      }
    }
    while (!accepted) {
      std::vector<double> v(n);
      for (std::size_t c = 0; c < n; ++c) v[c] = f[c] - step * 2.0 * psi[c];
      auto ft = project_box_mass_weighted(v, vol, m);
      double moved = 0.0;
      for (std::size_t c = 0; c < n; ++c) moved += vol[c] * (ft[c] - f[c]) * (ft[c] - f[c]);
      auto psit = potential(ft);
      const double Et = energy_of(ft, psit);
      if (Et <= E - kArmijo / step * moved) {
        f = std::move(ft);
        psi = std::move(psit);
        E = Et;
        accepted = true;
        if (++successes >= 5) step *= 2.0, successes = 0;
      } else {
        step *= opts.backtrack;
        successes = 0;
        if (step < 1e-30) break;
      }
    }
    if (!accepted) {
      trace.reason = "step underflow";
      break;
    }
    if ((iter + 1) % opts.log_every == 0) trace.log(iter + 1, E, trace.final_grad_norm);
  }
  if (trace.reason.empty()) trace.reason = "max_iters";
  trace.iterations = iter;
  trace.log(iter, E, trace.final_grad_norm);
  return trace;
}

}  // namespace

DensityResult minimize_density(const RadialKernel& k, double m, const GridSpec& grid, const OptimizeOptions& opts,
                               const std::optional<GridDensity>& init) {
  opts.validate();
  const double vol = grid.cell_volume();
  const std::size_t n = grid.cell_count();
  const double capacity = vol * static_cast<double>(n);
  if (!(m > 0.0) || m > capacity * (1.0 + 1e-12)) throw InfeasibleMass("minimize_density: mass is not feasible on this grid");
  if (m >= capacity * (1.0 - 1e-12)) {
    OptimizeTrace trace;
    GridDensity full(grid, std::vector<double>(n, 1.0));
    trace.log(1, energy_density(full, k), 0.0);
    trace.iterations = 1;
    trace.reason = "only feasible point";
    return {std::move(full), trace};
  }
  std::vector<double> f;
  if (init) {
    if (init->grid().dims != grid.dims || init->grid().spacing != grid.spacing)
      throw DimensionMismatch("minimize_density: init grid mismatch");
    f = project_box_mass(init->values(), vol, m);
  } else {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double c0 = m / capacity;
    f.resize(n);
    for (auto& v : f) v = c0 * (1.0 + opts.perturbation * U(rng));
    f = project_box_mass(f, vol, m);
  }
  const std::vector<double> vols(n, vol);
  // Kernel table for the free-set blocks.
  auto block = [&](const std::vector<std::size_t>& cells) {
    const auto s = static_cast<Eigen::Index>(cells.size());
    Eigen::MatrixXd Q(s, s);
    std::vector<Eigen::VectorXd> x;
    for (auto c : cells) x.push_back(grid.cell_center(c));
    for (Eigen::Index a = 0; a < s; ++a)
      for (Eigen::Index b = a; b < s; ++b) Q(a, b) = Q(b, a) = k.eval((x[a] - x[b]).norm());
    return Q;
  };
  auto potential = [&](const std::vector<double>& v) {
    // psi = sum_c' v_c' vol g(|x - x_c'|); density_potential includes the volume factor.
    return density_potential(GridDensity(grid, v), k);
  };
  double row_sum = 0.0;
  {
    std::vector<double> ones(n, 0.0);
    ones[n / 2] = 1.0;
    const auto col = density_potential(GridDensity(grid, ones), k);
    for (double v : col) row_sum += std::abs(v);
  }
  OptimizeTrace trace = box_projected_gradient(f, vols, m, opts, 2.0 * row_sum, potential, block);
  return {GridDensity(grid, std::move(f)), trace};
}

RadialResult minimize_radial(const RadialKernel& k, int N, double m, double r_max, int n_shells,
                             const OptimizeOptions& opts, const std::optional<RadialProfile>& init, int n_quad) {
  opts.validate();
  if (N < 1 || n_shells < 1 || !(r_max > 0.0)) throw InvalidArgument("minimize_radial: invalid shell grid");
  const double dr = r_max / n_shells;
  const auto W = radial_shell_weights(N, dr, n_shells);
  const double capacity = std::accumulate(W.begin(), W.end(), 0.0);
  if (!(m > 0.0) || m > capacity * (1.0 + 1e-12)) throw InfeasibleMass("minimize_radial: mass exceeds the shell capacity");
  std::vector<double> f(static_cast<std::size_t>(n_shells), 0.0);
  if (init) {
    if (init->dim() != N || init->shells() != n_shells || init->dr() != dr)
      throw DimensionMismatch("minimize_radial: init profile mismatch");
    f = init->values();
  } else {
    double acc = 0.0;
    for (int j = 0; j < n_shells && acc < m; ++j) {
      f[j] = std::min(1.0, (m - acc) / W[j]);
      acc += f[j] * W[j];
    }
  }
  f = project_box_mass_weighted(f, W, m);
  const Eigen::MatrixXd G = radial_kernel_matrix(k, N, dr, n_shells, n_quad);
  auto potential = [&](const std::vector<double>& v) {
    Eigen::VectorXd u(n_shells);
    for (int j = 0; j < n_shells; ++j) u(j) = v[j] * W[j];
    const Eigen::VectorXd p = G * u;
    return std::vector<double>(p.data(), p.data() + p.size());
  };
  auto block = [&](const std::vector<std::size_t>& shells) {
    const auto s = static_cast<Eigen::Index>(shells.size());
    Eigen::MatrixXd Q(s, s);
    for (Eigen::Index a = 0; a < s; ++a)
      for (Eigen::Index b = 0; b < s; ++b) Q(a, b) = G(shells[a], shells[b]);
    return Q;
  };
  double lip = 0.0;
  for (int j = 0; j < n_shells; ++j) {
    double row = 0.0;
    for (int l = 0; l < n_shells; ++l) row += std::abs(G(j, l)) * W[l];
    lip = std::max(lip, 2.0 * row);
  }
  OptimizeTrace trace = box_projected_gradient(f, W, m, opts, lip, potential, block);
  return {RadialProfile(N, dr, std::move(f)), trace};
}

// ---- diagnostics ---------------------------------------------------------------

std::vector<DensityComponent> density_components(const GridDensity& f, double threshold) {
  const GridSpec& g = f.grid();
  const int N = g.dim();
  const std::size_t n = g.cell_count();
  std::vector<std::size_t> stride(N);
  std::size_t s = 1;
  for (int a = N - 1; a >= 0; --a) stride[a] = s, s *= static_cast<std::size_t>(g.dims[a]);
  std::vector<int> label(n, -1);
  std::vector<DensityComponent> comps;
  for (std::size_t start = 0; start < n; ++start) {
    if (label[start] >= 0 || !(f.values()[start] > threshold)) continue;
    DensityComponent comp;
    comp.centroid = Eigen::VectorXd::Zero(N);
    std::vector<std::size_t> stack{start};
    label[start] = static_cast<int>(comps.size());
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      comp.cells.push_back(c);
      const double mc = f.values()[c] * g.cell_volume();
      comp.mass += mc;
      comp.centroid += mc * g.cell_center(c);
      const auto idx = g.multi_index(c);
      for (int a = 0; a < N; ++a)
        for (int dir : {-1, 1}) {
          const int q = idx[a] + dir;
          if (q < 0 || q >= g.dims[a]) continue;
          const std::size_t nb = dir > 0 ? c + stride[a] : c - stride[a];
          if (label[nb] < 0 && f.values()[nb] > threshold) {
            label[nb] = label[start];
            stack.push_back(nb);
          }
        }
    }
    std::sort(comp.cells.begin(), comp.cells.end());
    if (comp.mass > 0.0) comp.centroid /= comp.mass;
    comps.push_back(std::move(comp));
  }
  return comps;
}

double intermediate_fraction(const GridDensity& f, double lo) {
  std::size_t mid = 0, pos = 0;
  for (double v : f.values()) {
    if (v > lo) ++pos;
    if (v > lo && v < 1.0 - lo) ++mid;
  }
  return pos == 0 ? 0.0 : static_cast<double>(mid) / static_cast<double>(pos);
}

double intermediate_fraction(const RadialProfile& p, double lo) {
  const auto W = p.shell_weights();
  double mid = 0.0, pos = 0.0;
  for (int j = 0; j < p.shells(); ++j) {
    const double v = p.values()[j];
    if (v > lo) pos += W[j];
    if (v > lo && v < 1.0 - lo) mid += W[j];
  }
  return pos == 0.0 ? 0.0 : mid / pos;
}

PointSet density_support(const GridDensity& f, double threshold) {
  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < f.values().size(); ++c)
    if (f.values()[c] > threshold) cells.push_back(c);
  PointSet X(f.dim(), static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) X.col(static_cast<Eigen::Index>(i)) = f.grid().cell_center(cells[i]);
  return X;
}

namespace {

ClusterReport report_from_components(const std::vector<DensityComponent>& comps, int N) {
  ClusterReport rep;
  for (const auto& c : comps) {
    Cluster cl;
    cl.center = c.centroid;
    cl.mass = c.mass;
    rep.clusters.push_back(cl);
    rep.total_mass += c.mass;
  }
  const auto k = static_cast<Eigen::Index>(rep.clusters.size());
  rep.pairwise_center_distances = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      rep.pairwise_center_distances(i, j) = (rep.clusters[i].center - rep.clusters[j].center).norm();
  (void)N;
  return rep;
}

PointSet support_points(const DiscreteMeasure& mu) {
  std::vector<int> keep;
  for (int i = 0; i < mu.size(); ++i)
    if (mu.weights()(i) > 0.0) keep.push_back(i);
  PointSet X(mu.dim(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) X.col(static_cast<Eigen::Index>(i)) = mu.points().col(keep[i]);
  return X;
}

PointSet centred(const PointSet& X, const Eigen::VectorXd& c) { return X.colwise() - c; }

}  // namespace

std::vector<SweepRow> mass_sweep(const RadialKernel& k, const std::vector<double>& masses, const GridSpec& grid,
                                 const OptimizeOptions& opts, const std::optional<DiscreteMeasure>& reference) {
  std::vector<SweepRow> rows;
  if (masses.empty()) return rows;
  if (!std::is_sorted(masses.begin(), masses.end())) throw InvalidArgument("mass_sweep: masses must be sorted ascending");
  const int N = grid.dim();
  DiscreteMeasure ref = reference ? *reference
                                  : minimize_measure_multistart(k, N, 20 * (N + 1), OptimizeOptions{}).measure;
  if (ref.dim() != N) throw DimensionMismatch("mass_sweep: reference dimension mismatch");
  const ClusterReport ref_clusters = cluster_support(ref.points(), ref.weights(), 0.05);
  const Simplex simplex = build_simplex(N);
  for (double m : masses) {
    OptimizeOptions o = opts;
    o.grad_tol = std::min(opts.grad_tol, 1e-7 * m);
    const DensityResult r = minimize_density(k, m, grid, o);
    SweepRow row;
    row.m = m;
    row.energy = r.trace.energies.back();
    row.intermediate_fraction = intermediate_fraction(r.density);
    const auto comps = density_components(r.density);
    row.n_components = static_cast<int>(comps.size());
    const PointSet spt = density_support(r.density);
    PointSet a, b;
    const ClusterReport fc = report_from_components(comps, N);
    if (static_cast<int>(fc.clusters.size()) == N + 1 && static_cast<int>(ref_clusters.clusters.size()) == N + 1) {
      a = apply_alignment(align_to_simplex_detailed(fc, simplex), spt);
      b = apply_alignment(align_to_simplex_detailed(ref_clusters, simplex), support_points(ref));
    } else {
      Eigen::VectorXd cf = Eigen::VectorXd::Zero(N);
      for (const auto& c : comps) cf += c.mass * c.centroid;
      cf /= std::max(m, 1e-300);
      const Eigen::VectorXd cr = ref.points() * ref.weights() / ref.total_mass();
      a = centred(spt, cf);
      b = centred(support_points(ref), cr);
    }
    row.hausdorff_to_scaled_support = a.cols() > 0 ? hausdorff_distance(a, b) : std::numeric_limits<double>::infinity();
    rows.push_back(row);
  }
  return rows;
}

Classification classify_minimizer(const DiscreteMeasure& mu) {
  Classification c;
  const int N = mu.dim();
  const ClusterReport rep = cluster_support(mu.points(), mu.weights(), 0.05);
  const auto k = static_cast<int>(rep.clusters.size());
  c.diagnostics["n_clusters"] = k;
  if (k == N + 1) {
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        dmin = std::min(dmin, rep.pairwise_center_distances(i, j));
        dmax = std::max(dmax, rep.pairwise_center_distances(i, j));
      }
    if (k == 1) dmin = dmax = 1.0;
    c.diagnostics["min_center_distance"] = dmin;
    c.diagnostics["max_center_distance"] = dmax;
    if (std::abs(dmin - 1.0) <= 1e-2 && std::abs(dmax - 1.0) <= 1e-2) {
      c.shape = "simplex";
      c.diagnostics["residual"] = align_to_simplex(rep, build_simplex(N));
      return c;
    }
  }
  const Eigen::VectorXd centre = mu.points() * mu.weights() / mu.total_mass();
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0, rmean = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    if (!(mu.weights()(i) > 0.0)) continue;
    const double r = (mu.points().col(i) - centre).norm();
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    rmean += mu.weights()(i) * r;
  }
  rmean /= mu.total_mass();
  c.diagnostics["radius_min"] = rmin;
  c.diagnostics["radius_max"] = rmax;
  c.diagnostics["radius_mean"] = rmean;
  c.shape = (rmax - rmin < 1e-2 && rmin > 1e-2) ? "sphere" : "other";
  return c;
}

Classification classify_minimizer(const GridDensity& f) {
  Classification c;
  const auto comps = density_components(f);
  const int N = f.dim();
  c.diagnostics["n_components"] = static_cast<double>(comps.size());
  c.diagnostics["intermediate_fraction"] = intermediate_fraction(f);
  if (comps.empty()) {
    c.shape = "other";
    return c;
  }
  if (static_cast<int>(comps.size()) == N + 1 && N + 1 > 1) {
    const ClusterReport rep = report_from_components(comps, N);
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (int i = 0; i <= N; ++i)
      for (int j = i + 1; j <= N; ++j) {
        dmin = std::min(dmin, rep.pairwise_center_distances(i, j));
        dmax = std::max(dmax, rep.pairwise_center_distances(i, j));
      }
    c.diagnostics["min_center_distance"] = dmin;
    c.diagnostics["max_center_distance"] = dmax;
    c.diagnostics["residual"] = align_to_simplex(rep, build_simplex(N));
    c.shape = "simplex";
    return c;
  }
  if (comps.size() > 1) {
    c.shape = "other";
    return c;
  }
  const Eigen::VectorXd centroid = comps[0].centroid;
  double at_centre = 0.0, best = std::numeric_limits<double>::infinity();
  for (std::size_t cell = 0; cell < f.values().size(); ++cell) {
    const double d = (f.grid().cell_center(cell) - centroid).norm();
    if (d < best) best = d, at_centre = f.values()[cell];
  }
  c.diagnostics["value_at_centroid"] = at_centre;
  c.shape = at_centre < 0.01 ? "annulus" : "ball";
  return c;
}

Classification classify_minimizer(const RadialProfile& p) {
  Classification c;
  int first = -1, last = -1;
  for (int j = 0; j < p.shells(); ++j)
    if (p.values()[j] >= 0.5) {
      if (first < 0) first = j;
      last = j;
    }
  c.diagnostics["intermediate_fraction"] = intermediate_fraction(p);
  if (first < 0) {
    c.shape = "other";
    return c;
  }
  const double inner = first * p.dr(), outer = (last + 1) * p.dr();
  c.diagnostics["inner_radius"] = inner > 2.0 * p.dr() ? inner : 0.0;
  c.diagnostics["outer_radius"] = outer;
  c.shape = inner > 2.0 * p.dr() ? "annulus" : "ball";
  return c;
}

}  // namespace nlmin
