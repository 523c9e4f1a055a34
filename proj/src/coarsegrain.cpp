#include "soslab/coarsegrain.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "soslab/errors.hpp"

namespace soslab {

namespace {

Vec unit(int i) {
  Vec v{};
  v[static_cast<std::size_t>(i)] = 1.0;
  return v;
}

double dot(const Vec& a, const Vec& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a, int d) { return std::sqrt(dot(a, a, d)); }

Eigen::VectorXd to_eigen(const Vec& v, int d) {
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = v[i];
  return x;
}

Vec from_eigen(const Eigen::VectorXd& x) {
  Vec v{};
  for (Eigen::Index i = 0; i < x.size(); ++i) v[static_cast<std::size_t>(i)] = x(i);
  return v;
}

double slack_for(double tol, double scale) { return 100.0 * tol * (1.0 + std::abs(scale)); }

std::vector<LatticeBox> subcubes(const LatticeBox& cube, int n) {
  std::vector<LatticeBox> level{cube};
  for (int k = *cube.side_log3(); k > n; --k) {
    std::vector<LatticeBox> next;
    for (const auto& c : level)
      for (auto& ch : triadic_children(c)) next.push_back(std::move(ch));
    level = std::move(next);
  }
  return level;
}

double min_eigen(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff();
}

}  // namespace

AffineHats::AffineHats(const ClusterDecomposition& clusters) : dim_(clusters.box.dim()) {
  for (int i = 0; i < dim_; ++i) {
    hats_[i] = VertexFunction(clusters.box);
    for (const auto& x : clusters.box.sites()) hats_[i](x) = static_cast<double>(x[i]);
    for (const auto& c : clusters.clusters) {
      double sum = 0.0;
      for (const auto& y : c.boundary) sum += static_cast<double>(y[i]);
      const double mean = c.boundary.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : sum / static_cast<double>(c.boundary.size());
      for (const auto& x : c.vertices) hats_[i](x) = mean;
    }
  }
}

double AffineHats::operator()(const Coord& x, const Vec& p) const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double h = hats_[i](x);
    if (std::isnan(h)) throw DegenerateClusterError("AffineHats: the cluster at this site has no boundary vertex in the box");
    if (p[i] != 0.0) s += p[i] * h;
  }
  return s;
}

CubeProblem::CubeProblem(const TauField& tau, const AffineHats& hats, const LatticeBox& region, SolverOptions options)
    : tau_(&tau),
      hats_(&hats),
      region_(region),
      options_(options),
      dirichlet_(region, tau, BoundaryMode::dirichlet, options),
      natural_(region, tau, BoundaryMode::natural, options) {
  if (!tau.box().contains_box(region)) throw DomainError("CubeProblem: region leaves the field box");
}

VertexFunction CubeProblem::hat_affine(const Vec& p) const {
  VertexFunction g(region_);
  for (const auto& x : region_.sites()) g(x) = (*hats_)(x, p);
  return g;
}

VertexFunction CubeProblem::nu_minimizer(const Vec& p) const {
  return solve_dirichlet(dirichlet_, VertexFunction(region_), hat_affine(p)).solution;
}

double CubeProblem::nu(const Vec& p) const { return energy(nu_minimizer(p)); }

VertexFunction CubeProblem::nu_star_maximizer(const Vec& q) const {
  return solve_neumann_variational(natural_, q).solution;
}

double CubeProblem::nu_star(const Vec& q) const {
  const auto u = nu_star_maximizer(q);
  const auto g = mean_gradient(u);
  return dot(q, g, region_.dim()) - energy(u);
}

double CubeProblem::energy(const VertexFunction& w) const {
  const auto& edges = dirichlet_.edges();
  const auto& a = dirichlet_.conductances();
  double s = 0.0;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const double g = gradient(w, edges[k]);
    s += 0.5 * a[k] * g * g;
  }
  return s / region_.volume();
}

Vec CubeProblem::mean_gradient(const VertexFunction& w) const {
  Vec m{};
  for (const auto& e : dirichlet_.edges()) m[static_cast<std::size_t>(e.axis)] += gradient(w, e);
  for (auto& v : m) v /= region_.volume();
  return m;
}

Vec CubeProblem::mean_flux(const VertexFunction& w) const {
  const auto& edges = dirichlet_.edges();
  const auto& a = dirichlet_.conductances();
  Vec m{};
  for (std::size_t k = 0; k < edges.size(); ++k) m[static_cast<std::size_t>(edges[k].axis)] += a[k] * gradient(w, edges[k]);
  for (auto& v : m) v /= region_.volume();
  return m;
}

Eigen::MatrixXd reconstruct_matrix(const QuadraticValues& values) {
  const int d = values.dim;
  if (values.diag.size() != static_cast<std::size_t>(d) || values.cross.size() != static_cast<std::size_t>(d * (d - 1) / 2))
    throw DomainError("reconstruct_matrix: need values at e_i and e_i + e_j");
  Eigen::MatrixXd m(d, d);
  std::size_t k = 0;
  for (int i = 0; i < d; ++i) {
    m(i, i) = 2.0 * values.diag[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < d; ++j, ++k)
      m(i, j) = m(j, i) = values.cross[k] - values.diag[static_cast<std::size_t>(i)] - values.diag[static_cast<std::size_t>(j)];
  }
  return m;
}

namespace {

template <class F>
QuadraticValues sample_form(int d, F f) {
  QuadraticValues v;
  v.dim = d;
  for (int i = 0; i < d; ++i) v.diag.push_back(f(unit(i)));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Vec p = unit(i);
      p[static_cast<std::size_t>(j)] = 1.0;
      v.cross.push_back(f(p));
    }
  return v;
}

template <class F>
QuadraticityCheck check_form(int d, F f, std::span<const Vec> extra) {
  QuadraticityCheck c;
  c.matrix = reconstruct_matrix(sample_form(d, f));
  std::vector<Vec> tests{};
  Vec two = unit(0);
  two[0] = 2.0;
  tests.push_back(two);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Vec p = unit(i);
      p[static_cast<std::size_t>(j)] = -1.0;
      tests.push_back(p);
    }
  tests.insert(tests.end(), extra.begin(), extra.end());
  for (const auto& p : tests) {
    const Eigen::VectorXd x = to_eigen(p, d);
    const double predicted = 0.5 * x.dot(c.matrix * x);
    const double direct = f(p);
    const double scale = std::max({std::abs(direct), std::abs(predicted), 1e-300});
    c.residual = std::max(c.residual, std::abs(direct - predicted) / scale);
  }
  return c;
}

}  // namespace

QuadraticValues sample_nu(const CubeProblem& problem) {
  return sample_form(problem.region().dim(), [&](const Vec& p) { return problem.nu(p); });
}

QuadraticValues sample_nu_star(const CubeProblem& problem) {
  return sample_form(problem.region().dim(), [&](const Vec& q) { return problem.nu_star(q); });
}

QuadraticityCheck check_nu_quadratic(const CubeProblem& problem, std::span<const Vec> extra) {
  return check_form(problem.region().dim(), [&](const Vec& p) { return problem.nu(p); }, extra);
}

QuadraticityCheck check_nu_star_quadratic(const CubeProblem& problem, std::span<const Vec> extra) {
  return check_form(problem.region().dim(), [&](const Vec& q) { return problem.nu_star(q); }, extra);
}

double compute_nu(const TauField& tau, const ClusterDecomposition& clusters, const LatticeBox& region, const Vec& p) {
  const AffineHats hats(clusters);
  return CubeProblem(tau, hats, region).nu(p);
}

double compute_nu_star(const TauField& tau, const LatticeBox& region, const Vec& q) {
  ClusterDecomposition none;
  none.box = tau.box();
  none.site_cluster.assign(tau.box().site_count(), -1);
  const AffineHats hats(none);
  return CubeProblem(tau, hats, region).nu_star(q);
}

CoarseMatrices coarse_matrices(const CubeProblem& problem) {
  CoarseMatrices m;
  const auto nu = check_nu_quadratic(problem);
  const auto nus = check_nu_star_quadratic(problem);
  m.a_bar = nu.matrix;
  m.a_bar_star = nus.matrix.inverse();
  m.nu_residual = nu.residual;
  m.nu_star_residual = nus.residual;
  return m;
}

bool InequalityResiduals::ok() const {
  return nu_subadditivity <= slack && nu_star_superadditivity <= slack && energy_lower_bound <= slack &&
         spatial_flux <= slack && spatial_gradient <= slack && fenchel <= slack && fenchel_identity <= slack;
}

namespace {

// G(p) = (1/|U|) Σ_{E(U)} (∇ℓ̂_p − ∇ℓ_p), per direction.
Vec hat_gradient_error(const CubeProblem& problem, const Vec& p) {
  const auto g = problem.hat_affine(p);
  auto m = problem.mean_gradient(g);
  // Σ over the i-edges of ∇ℓ_p is p_i times their count.
  std::array<double, kMaxDim> count{};
  for (const auto& e : enumerate_edges(problem.region())) count[static_cast<std::size_t>(e.axis)] += 1.0;
  for (int i = 0; i < problem.region().dim(); ++i) m[i] -= p[i] * count[i] / problem.region().volume();
  return m;
}

}  // namespace

InequalityResiduals check_inequalities(const TauField& tau, const ClusterDecomposition& clusters,
                                       const LatticeBox& parent, std::span<const LatticeBox> children,
                                       std::span<const Vec> test_vectors, SolverOptions options) {
  const int d = parent.dim();
  const AffineHats hats(clusters);
  const CubeProblem top(tau, hats, parent, options);
  std::vector<CubeProblem> kids;
  double child_volume = 0.0;
  for (const auto& c : children) {
    kids.emplace_back(tau, hats, c, options);
    child_volume += c.volume();
  }
  if (std::abs(child_volume - parent.volume()) > 0.5) throw DomainError("check_inequalities: children do not partition the parent");

  InequalityResiduals r;
  r.nu_subadditivity = r.nu_star_superadditivity = r.energy_lower_bound = r.fenchel = -1e300;
  double scale = 0.0;

  {
    std::size_t inner = 0;
    for (const auto& c : children) inner += enumerate_edges(c).size();
    r.interface_edges = enumerate_edges(parent).size() - inner;
  }

  const auto m = coarse_matrices(top);
  for (const auto& p : test_vectors) {
    const double nu_p = top.nu(p);
    double avg = 0.0, avg_star = 0.0;
    for (const auto& k : kids) {
      avg += k.region().volume() / parent.volume() * k.nu(p);
      avg_star += k.region().volume() / parent.volume() * k.nu_star(p);
    }
    const double nus_p = top.nu_star(p);
    r.nu_subadditivity = std::max(r.nu_subadditivity, nu_p - avg);
    r.nu_star_superadditivity = std::max(r.nu_star_superadditivity, nus_p - avg_star);
    scale = std::max({scale, std::abs(nu_p), std::abs(nus_p), avg, avg_star});

    const auto v = top.nu_minimizer(p);
    const auto gbar = to_eigen(top.mean_gradient(v), d);
    const double lower = 0.5 * gbar.dot(m.a_bar_star * gbar);
    const double ev = top.energy(v);
    r.energy_lower_bound = std::max(r.energy_lower_bound, lower - ev);
    scale = std::max(scale, ev);

    const auto u = top.nu_star_maximizer(p);
    const auto flux = top.mean_flux(u);
    const auto grad = top.mean_gradient(u);
    const Eigen::VectorXd expect = m.a_bar_star.inverse() * to_eigen(p, d);
    for (int i = 0; i < d; ++i) {
      r.spatial_flux = std::max(r.spatial_flux, std::abs(flux[i] - p[i]));
      r.spatial_gradient = std::max(r.spatial_gradient, std::abs(grad[i] - expect(i)));
    }

    for (const auto& q : test_vectors) {
      const Vec gerr = hat_gradient_error(top, p);
      const double nus_q = top.nu_star(q);
      const double bound = dot(p, q, d) - norm(gerr, d) * norm(q, d);
      r.fenchel = std::max(r.fenchel, bound - (nu_p + nus_q));
      // ν(p) + ν*(q) ≥ (1/|U|) Σ ∇ℓ_q ∇v = p·q + q·G(p).
      const Vec mg = top.mean_gradient(v);
      const double lhs = dot(q, mg, d);
      r.fenchel_identity = std::max(r.fenchel_identity, std::abs(lhs - (dot(p, q, d) + dot(q, gerr, d))));
      scale = std::max({scale, std::abs(nus_q), std::abs(dot(p, q, d))});
    }
  }
  r.slack = slack_for(options.tolerance, scale);
  return r;
}

DualityOrdering duality_ordering(const CubeProblem& problem, const CoarseMatrices& m) {
  const int d = problem.region().dim();
  Eigen::MatrixXd g(d, d);
  for (int j = 0; j < d; ++j) g.col(j) = to_eigen(hat_gradient_error(problem, unit(j)), d);
  DualityOrdering o;
  o.hat_error = Eigen::JacobiSVD<Eigen::MatrixXd>(g).singularValues()(0);
  const double star_norm = Eigen::JacobiSVD<Eigen::MatrixXd>(m.a_bar_star).singularValues()(0);
  const double lam = min_eigen(m.a_bar);
  o.epsilon = lam > 0.0 ? 2.0 * o.hat_error * star_norm / lam : std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m.a_bar + m.a_bar.transpose()));
  const Eigen::MatrixXd inv_sqrt = es.operatorInverseSqrt();
  const Eigen::MatrixXd rel = inv_sqrt * m.a_bar_star * inv_sqrt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(0.5 * (rel + rel.transpose()));
  o.max_ratio = er.eigenvalues().maxCoeff();
  return o;
}

LatticeBox central_cube(int dim, int n) {
  Coord corner{};
  for (int i = 0; i < dim; ++i) corner[i] = -(pow3(n) - 1) / 2;
  return LatticeBox::half_open_triadic(dim, n, corner);
}

std::vector<ScaleEntry> scale_sweep_sample(const TauField& tau, const ClusterDecomposition& clusters, int n_max,
                                           SolverOptions options) {
  const int d = tau.box().dim();
  const auto top = central_cube(d, n_max);
  if (!tau.box().contains_box(top.enlarged())) throw DomainError("scale_sweep: field box too small for the top scale");
  const AffineHats hats(clusters);
  std::vector<ScaleEntry> out;
  for (int n = 1; n <= n_max; ++n) {
    ScaleEntry s;
    s.scale = n;
    s.a_bar = Eigen::MatrixXd::Zero(d, d);
    s.a_bar_star = Eigen::MatrixXd::Zero(d, d);
    s.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (const auto& cube : subcubes(top, n)) {
      const CubeProblem prob(tau, hats, cube, options);
      const auto m = coarse_matrices(prob);
      const auto ord = duality_ordering(prob, m);
      s.a_bar += m.a_bar;
      s.a_bar_star += m.a_bar_star;
      s.gap += (m.a_bar - m.a_bar_star).norm();
      s.max_quadratic_residual = std::max({s.max_quadratic_residual, m.nu_residual, m.nu_star_residual});
      s.min_eigenvalue = std::min({s.min_eigenvalue, min_eigen(m.a_bar), min_eigen(m.a_bar_star)});
      s.epsilon = std::max(s.epsilon, ord.epsilon);
      s.ordering_ratio = std::max(s.ordering_ratio, ord.max_ratio);
      s.ordering_ok = s.ordering_ok && ord.ok(slack_for(options.tolerance, ord.max_ratio));
      ++s.cubes;
    }
    const double c = static_cast<double>(s.cubes);
    s.a_bar /= c;
    s.a_bar_star /= c;
    s.gap /= c;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScaleSummary> summarize_sweep(const std::vector<std::vector<ScaleEntry>>& per_sample) {
  std::vector<ScaleSummary> out;
  if (per_sample.empty()) return out;
  const std::size_t scales = per_sample.front().size();
  for (std::size_t k = 0; k < scales; ++k) {
    ScaleSummary s;
    const auto& first = per_sample.front()[k];
    const auto d = first.a_bar.rows();
    s.scale = first.scale;
    s.min_eigenvalue = std::numeric_limits<double>::infinity();
    std::vector<double> gap, scalar;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        std::vector<double> x, y;
        for (const auto& smp : per_sample) {
          x.push_back(smp[k].a_bar(i, j));
          y.push_back(smp[k].a_bar_star(i, j));
        }
        s.a_bar.push_back(stats::mean_estimate(x));
        s.a_bar_star.push_back(stats::mean_estimate(y));
      }
    for (const auto& smp : per_sample) {
      const auto& e = smp[k];
      gap.push_back(e.gap);
      scalar.push_back(std::sqrt(e.a_bar.trace() * e.a_bar_star.trace()) / static_cast<double>(d));
      s.min_eigenvalue = std::min(s.min_eigenvalue, e.min_eigenvalue);
      s.max_quadratic_residual = std::max(s.max_quadratic_residual, e.max_quadratic_residual);
      s.ordering_violations += e.ordering_ok ? 0 : 1;
    }
    s.gap = stats::mean_estimate(gap);
    s.scalar = stats::mean_estimate(scalar);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> corrector_flatness(const TauField& tau, const ClusterDecomposition& clusters, int n_max,
                                       const Vec& p, SolverOptions options) {
  const int d = tau.box().dim();
  const AffineHats hats(clusters);
  std::vector<double> out;
  for (int n = 1; n <= n_max; ++n) {
    const auto cube = central_cube(d, n);
    const CubeProblem prob(tau, hats, cube, options);
    const auto m = coarse_matrices(prob);
    const Vec q = from_eigen(m.a_bar_star * to_eigen(p, d));
    const auto u = prob.nu_star_maximizer(q);
    const auto lhat = prob.hat_affine(p);
    EdgeFunction diff(cube);
    for (const auto& e : enumerate_edges(cube)) diff(e) = gradient(u, e) - gradient(lhat, e);
    out.push_back(h_minus_one_norm(diff, cube) / static_cast<double>(pow3(n)));
  }
  return out;
}

SimplexComparison simplex_nu(const TauField& tau, const ClusterDecomposition& clusters, int n, const Coord& corner,
                             const Vec& p) {
  const int d = tau.box().dim();
  const AffineHats hats(clusters);
  SimplexComparison c;
  c.cube = CubeProblem(tau, hats, LatticeBox::half_open_triadic(d, n, corner)).nu(p);
  double total = 0.0;
  for (const auto& s : enumerate_simplexes(n, d, corner)) {
    c.simplexes.push_back(CubeProblem(tau, hats, s).nu(p));
    total += c.simplexes.back();
  }
  c.simplex_mean = total / static_cast<double>(c.simplexes.size());
  return c;
}

}  // namespace soslab
