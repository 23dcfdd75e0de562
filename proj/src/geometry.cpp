#include "nlmin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "nlmin/errors.hpp"

namespace nlmin {

double simplex_height(int N) { return std::sqrt((N + 1.0) / (2.0 * N)); }
double simplex_circumradius(int N) { return std::sqrt(N / (2.0 * N + 2.0)); }

Simplex build_simplex(int N) {
  if (N < 1) throw InvalidArgument("build_simplex: N must be >= 1");
  PointSet v(1, 2);
  v << -0.5, 0.5;
  for (int d = 2; d <= N; ++d) {
    const double drop = simplex_height(d) - simplex_circumradius(d);
    PointSet next = PointSet::Zero(d, d + 1);
    next.topLeftCorner(d - 1, d) = v;
    next.block(d - 1, 0, 1, d).setConstant(-drop);
    next(d - 1, d) = simplex_circumradius(d);
    const Eigen::VectorXd c = next.rowwise().mean();
    next.colwise() -= c;
    v = std::move(next);
  }
  Simplex s;
  s.dim = N;
  s.vertices = std::move(v);
  s.height = simplex_height(N);
  s.circumradius = simplex_circumradius(N);
  return s;
}

double k_constant(int N) {
  if (N < 1) throw InvalidArgument("k_constant: N must be >= 1");
  return N == 1 ? 1.0 : 0.5;
}

namespace {

// Minimal Nelder–Mead on R^n.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                            double scale, int max_iter, double ftol) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1](i) += scale;
  for (int i = 0; i <= n; ++i) vals[i] = f(pts[i]);
  std::vector<int> idx(n + 1);
  for (int it = 0; it < max_iter; ++it) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = idx[0], worst = idx[n], second = idx[n - 1];
    if (std::abs(vals[worst] - vals[best]) <= ftol) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[idx[i]];
    centroid /= n;
    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = f(xr);
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(xe);
      if (fe < fr) pts[worst] = xe, vals[worst] = fe;
      else pts[worst] = xr, vals[worst] = fr;
    } else if (fr < vals[second]) {
      pts[worst] = xr, vals[worst] = fr;
    } else {
      const Eigen::VectorXd xc = centroid + 0.5 * (pts[worst] - centroid);
      const double fc = f(xc);
      if (fc < vals[worst]) {
        pts[worst] = xc, vals[worst] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[idx[i]] = pts[best] + 0.5 * (pts[idx[i]] - pts[best]);
          vals[idx[i]] = f(pts[idx[i]]);
        }
      }
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return pts[static_cast<std::size_t>(std::distance(vals.begin(), it))];
}

}  // namespace

double k_constant_numeric(int N, int n_directions, std::uint64_t seed) {
  if (N < 1) throw InvalidArgument("k_constant_numeric: N must be >= 1");
  if (n_directions < 100) throw InvalidArgument("k_constant_numeric: need >= 100 directions");
  const Simplex s = build_simplex(N);
  const PointSet diff = s.vertices.colwise() - s.vertices.col(0);
  auto objective = [&](const Eigen::VectorXd& v) {
    const double nv = v.norm();
    if (nv == 0.0) return std::numeric_limits<double>::infinity();
    return (diff.transpose() * (v / nv)).squaredNorm();
  };
  if (N == 1) return std::min(objective(Eigen::VectorXd::Constant(1, 1.0)), objective(Eigen::VectorXd::Constant(1, -1.0)));

  Eigen::VectorXd best;
  double best_val = std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::VectorXd& v) {
    const double val = objective(v);
    if (val < best_val) best_val = val, best = v;
  };
  if (N == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n_directions; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / n_directions;
      const double r = std::sqrt(1.0 - z * z);
      Eigen::Vector3d v(r * std::cos(golden * i), r * std::sin(golden * i), z);
      consider(v);
    }
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(N);
    for (int i = 0; i < n_directions; ++i) {
      for (int j = 0; j < N; ++j) v(j) = nd(rng);
      consider(v);
    }
  }
  const Eigen::VectorXd refined = nelder_mead(objective, best / best.norm(), 0.05, 20000, 1e-15);
  return std::min(best_val, objective(refined));
}

ClusterReport cluster_support(const PointSet& points, const Eigen::VectorXd& weights, double link_radius,
                              double min_cluster_mass) {
  if (!(link_radius > 0.0)) throw InvalidArgument("cluster_support: link_radius must be > 0");
  const int n = static_cast<int>(points.cols());
  if (weights.size() != n) throw DimensionMismatch("cluster_support: weights/points size mismatch");
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  const double r2 = link_radius * link_radius;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((points.col(i) - points.col(j)).squaredNorm() <= r2) {
        const int a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[root]].push_back(i);
  }
  ClusterReport rep;
  rep.total_mass = weights.sum();
  for (auto& members : groups) {
    Cluster c;
    c.members = members;
    c.center = Eigen::VectorXd::Zero(points.rows());
    for (int i : members) c.mass += weights(i);
    for (int i : members) c.center += (c.mass > 0.0 ? weights(i) / c.mass : 1.0 / members.size()) * points.col(i);
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b)
        c.diameter = std::max(c.diameter, (points.col(members[a]) - points.col(members[b])).norm());
    if (c.mass < min_cluster_mass) {
      rep.unclustered_mass += c.mass;
      continue;
    }
    rep.clusters.push_back(std::move(c));
  }
  std::sort(rep.clusters.begin(), rep.clusters.end(), [](const Cluster& a, const Cluster& b) {
    return std::lexicographical_compare(a.center.data(), a.center.data() + a.center.size(), b.center.data(),
                                        b.center.data() + b.center.size());
  });
  const int k = static_cast<int>(rep.clusters.size());
  rep.pairwise_center_distances = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      rep.pairwise_center_distances(i, j) = (rep.clusters[i].center - rep.clusters[j].center).norm();
  return rep;
}

namespace {

double directed_hausdorff(const PointSet& a, const PointSet& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b.cols(); ++j) best = std::min(best, (a.col(i) - b.col(j)).squaredNorm());
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

}  // namespace

double hausdorff_distance(const PointSet& a, const PointSet& b) {
  if (a.cols() == 0 || b.cols() == 0) throw EmptySet("hausdorff_distance: point sets must be non-empty");
  if (a.rows() != b.rows()) throw DimensionMismatch("hausdorff_distance: dimension mismatch");
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

SimplexAlignment align_to_simplex_detailed(const ClusterReport& report, const Simplex& simplex) {
  const int k = static_cast<int>(report.clusters.size());
  if (k != simplex.dim + 1)
    throw ClusterCountMismatch("align_to_simplex: expected " + std::to_string(simplex.dim + 1) + " clusters, got " +
                               std::to_string(k));
  const int N = simplex.dim;
  PointSet centers(N, k);
  for (int i = 0; i < k; ++i) {
    if (report.clusters[i].center.size() != N) throw DimensionMismatch("align_to_simplex: dimension mismatch");
    centers.col(i) = report.clusters[i].center;
  }
  const Eigen::VectorXd cc = centers.rowwise().mean();
  const PointSet a = centers.colwise() - cc;

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  SimplexAlignment best;
  best.residual = std::numeric_limits<double>::infinity();
  do {
    PointSet b(N, k);
    for (int i = 0; i < k; ++i) b.col(i) = simplex.vertices.col(perm[i]);
    // Orthogonal Procrustes: R = U V^T from the SVD of B A^T (reflections allowed).
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b * a.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd R = svd.matrixU() * svd.matrixV().transpose();
    const double rms = std::sqrt((R * a - b).squaredNorm() / k);
    if (rms < best.residual) {
      best.residual = rms;
      best.rotation = R;
      best.translation = -R * cc;
      best.assignment = perm;
    }
  } while (N <= 3 && std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double align_to_simplex(const ClusterReport& report, const Simplex& simplex) {
  return align_to_simplex_detailed(report, simplex).residual;
}

PointSet apply_alignment(const SimplexAlignment& al, const PointSet& points) {
  PointSet out = al.rotation * points;
  out.colwise() += al.translation;
  return out;
}

}  // namespace nlmin
