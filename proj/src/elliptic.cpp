#include "soslab/elliptic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "soslab/errors.hpp"

namespace soslab {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct ConductanceOperator::Factor {
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  SpMat reduced;
};

namespace {

constexpr int kFixed = -1;
constexpr int kAbsent = -2;

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double backward_error(const SpMat& A, double a_norm, const Vec& x, const Vec& b) {
  const double num = inf_norm(b - A * x);
  const double den = a_norm * inf_norm(x) + inf_norm(b);
  return den > 0.0 ? num / den : 0.0;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ConductanceOperator::ConductanceOperator(const LatticeBox& region, const TauField& tau, BoundaryMode mode,
                                         SolverOptions options)
    : region_(region), mode_(mode), options_(options) {
  for (const auto& e : enumerate_edges(region))
    if (!tau.box().contains(e.base) || !tau.box().contains(e.head()))
      throw DomainError("ConductanceOperator: region leaves the field box");
  build([&tau](const Edge& e) { return tau.a(e); });
}

ConductanceOperator::ConductanceOperator(const LatticeBox& region, const Conductance& a, BoundaryMode mode,
                                         SolverOptions options)
    : region_(region), mode_(mode), options_(options) {
  build(a);
}

ConductanceOperator ConductanceOperator::unit(const LatticeBox& region, BoundaryMode mode, SolverOptions options) {
  return ConductanceOperator(region, Conductance([](const Edge&) { return 1.0; }), mode, options);
}

ConductanceOperator::ConductanceOperator(ConductanceOperator&&) noexcept = default;
ConductanceOperator& ConductanceOperator::operator=(ConductanceOperator&&) noexcept = default;
ConductanceOperator::~ConductanceOperator() = default;

void ConductanceOperator::build(const Conductance& a) {
  if (region_.empty()) throw DomainError("ConductanceOperator: empty region");
  ix_ = BoxIndexer(region_.dim(), region_.lo(), region_.hi());
  edges_ = enumerate_edges(region_);
  cond_.reserve(edges_.size());
  for (const auto& e : edges_) {
    const double c = a(e);
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("ConductanceOperator: conductance must be positive and finite");
    cond_.push_back(c);
  }
  unknown_of_site_.assign(ix_.size(), kAbsent);
  std::vector<char> touched(ix_.size(), 0);
  for (const auto& e : edges_) {
    touched[ix_.index(e.base)] = 1;
    touched[ix_.index(e.head())] = 1;
  }
  for (std::size_t k = 0; k < ix_.size(); ++k) {
    if (!touched[k]) continue;
    const Coord x = ix_.coord(k);
    if (mode_ == BoundaryMode::dirichlet && region_.is_boundary(x)) {
      unknown_of_site_[k] = kFixed;
    } else {
      unknown_of_site_[k] = static_cast<int>(unknowns_.size());
      unknowns_.push_back(x);
    }
  }
  const auto n = static_cast<Eigen::Index>(unknowns_.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(edges_.size() * 4);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const int i = local(edges_[k].base), j = local(edges_[k].head());
    const double c = cond_[k];
    if (i >= 0) trip.emplace_back(i, i, c);
    if (j >= 0) trip.emplace_back(j, j, c);
    if (i >= 0 && j >= 0) {
      trip.emplace_back(i, j, -c);
      trip.emplace_back(j, i, -c);
    }
  }
  matrix_.resize(n, n);
  matrix_.setFromTriplets(trip.begin(), trip.end());
  matrix_.makeCompressed();
  matrix_norm_ = 0.0;
  for (Eigen::Index c = 0; c < matrix_.outerSize(); ++c) {
    double s = 0.0;
    for (SpMat::InnerIterator it(matrix_, c); it; ++it) s += std::abs(it.value());
    matrix_norm_ = std::max(matrix_norm_, s);
  }
}

int ConductanceOperator::local(const Coord& x) const { return unknown_of_site_[ix_.index(x)]; }

bool ConductanceOperator::is_fixed(const Coord& x) const {
  return ix_.contains(x) && unknown_of_site_[ix_.index(x)] == kFixed;
}

double ConductanceOperator::form(const VertexFunction& v, const VertexFunction& w) const {
  double s = 0.0;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    s += cond_[k] * (v(e.head()) - v(e.base)) * (w(e.head()) - w(e.base));
  }
  return s;
}

void ConductanceOperator::factorize() const {
  if (factor_) return;
  auto f = std::make_unique<Factor>();
  if (mode_ == BoundaryMode::natural) {
    const auto n = matrix_.rows();
    if (n < 2) {
      f->reduced.resize(0, 0);
    } else {
      f->reduced = matrix_.bottomRightCorner(n - 1, n - 1);
    }
  } else {
    f->reduced = matrix_;
  }
  if (f->reduced.rows() > 0) {
    f->llt.compute(f->reduced);
    if (f->llt.info() != Eigen::Success) {
      double smallest = f->reduced.rows() ? f->reduced.diagonal().minCoeff() : 0.0;
      throw SolverError("sparse Cholesky failed (smallest diagonal entry " + std::to_string(smallest) + ")");
    }
  }
  factor_ = std::move(f);
}

SolveReport ConductanceOperator::solve(const EdgeFunction* h, const VertexFunction* b, const VertexFunction* g) const {
  const auto t0 = std::chrono::steady_clock::now();
  const auto n = static_cast<Eigen::Index>(unknowns_.size());
  Vec rhs = Vec::Zero(n);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    const int i = local(e.base), j = local(e.head());
    if (h) {
      const double he = (*h)(e);
      if (i >= 0) rhs[i] -= he;
      if (j >= 0) rhs[j] += he;
    }
    if (g) {
      if (i >= 0 && j == kFixed) rhs[i] += cond_[k] * (*g)(e.head());
      if (j >= 0 && i == kFixed) rhs[j] += cond_[k] * (*g)(e.base);
    }
  }
  if (b)
    for (Eigen::Index k = 0; k < n; ++k) rhs[k] += (*b)(unknowns_[static_cast<std::size_t>(k)]);
  if (mode_ == BoundaryMode::natural && n > 0) rhs.array() -= rhs.mean();

  SolveReport rep;
  Vec x = Vec::Zero(n);
  const bool natural = mode_ == BoundaryMode::natural;
  const Eigen::Index off = natural ? 1 : 0;
  const Eigen::Index m = n - off;
  if (m > 0 && rhs.tail(m).cwiseAbs().maxCoeff() > 0.0) {
    if (options_.kind == SolverKind::cholesky) {
      factorize();
      Vec y = factor_->llt.solve(rhs.tail(m));
      for (int it = 0; it < 3; ++it) {
        x.tail(m) = y;
        if (backward_error(matrix_, matrix_norm_, x, rhs) <= options_.tolerance * 1e-3) break;
        Vec r = rhs.tail(m) - factor_->reduced * y;
        y += factor_->llt.solve(r);
      }
      x.tail(m) = y;
      rep.iterations = 1;
    } else {
      const SpMat A = natural ? SpMat(matrix_.bottomRightCorner(m, m)) : matrix_;
      const Vec bb = rhs.tail(m);
      Vec dinv = A.diagonal().cwiseInverse();
      Vec y = Vec::Zero(m), r = bb, z = dinv.cwiseProduct(r), p = z;
      double rz = r.dot(z);
      const double bnorm = bb.norm();
      int it = 0;
      for (; it < options_.max_iterations; ++it) {
        const double rel = r.norm() / bnorm;
        rep.residual_history.push_back(rel);
        if (rel <= options_.tolerance) break;
        const Vec Ap = A * p;
        const double alpha = rz / p.dot(Ap);
        y += alpha * p;
        r -= alpha * Ap;
        z = dinv.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
      }
      if (it == options_.max_iterations)
        throw SolverError("PCG did not converge in " + std::to_string(it) + " iterations", rep.residual_history);
      x.tail(m) = y;
      rep.iterations = it;
    }
  }
  if (natural && n > 0) x.array() -= x.mean();
  rep.relative_residual = backward_error(matrix_, matrix_norm_, x, rhs);

  rep.solution = VertexFunction(region_);
  for (std::size_t k = 0; k < ix_.size(); ++k) {
    const int u = unknown_of_site_[k];
    if (u >= 0)
      rep.solution[k] = x[u];
    else if (u == kFixed && g)
      rep.solution[k] = (*g)(ix_.coord(k));
  }
  rep.wall_time = seconds_since(t0);
  return rep;
}

double ConductanceOperator::log_det() const {
  if (mode_ != BoundaryMode::dirichlet) throw DomainError("log_det needs Dirichlet mode");
  if (unknowns_.empty()) return 0.0;
  factorize();
  const SpMat& L = factor_->llt.matrixL().nestedExpression();
  double s = 0.0;
  for (Eigen::Index k = 0; k < L.rows(); ++k) s += 2.0 * std::log(L.coeff(k, k));
  return s;
}

SolveReport solve_dirichlet(const ConductanceOperator& op, const VertexFunction& rhs, const VertexFunction& g) {
  if (op.mode() != BoundaryMode::dirichlet) throw DomainError("solve_dirichlet needs Dirichlet mode");
  // ∇·a∇u = rhs  ⇔  K u = −rhs with K the stiffness matrix.
  VertexFunction b = rhs;
  for (auto& v : b.values()) v = -v;
  auto rep = op.solve(nullptr, &b, &g);
  if (rep.relative_residual > op.options().tolerance)
    throw SolverError("Dirichlet solve residual above tolerance", {rep.relative_residual});
  return rep;
}

SolveReport solve_dirichlet_divergence(const ConductanceOperator& op, const EdgeFunction& f, const VertexFunction& g) {
  if (op.mode() != BoundaryMode::dirichlet) throw DomainError("solve_dirichlet needs Dirichlet mode");
  auto rep = op.solve(&f, nullptr, &g);
  if (rep.relative_residual > op.options().tolerance)
    throw SolverError("Dirichlet solve residual above tolerance", {rep.relative_residual});
  return rep;
}

SolveReport solve_neumann_variational(const ConductanceOperator& op, const std::array<double, kMaxDim>& q) {
  if (op.mode() != BoundaryMode::natural) throw DomainError("solve_neumann_variational needs natural mode");
  EdgeFunction h(op.region());
  for (const auto& e : op.edges()) h(e) = q[static_cast<std::size_t>(e.axis)];
  auto rep = op.solve(&h, nullptr, nullptr);
  if (rep.relative_residual > op.options().tolerance)
    throw SolverError("natural-boundary solve residual above tolerance", {rep.relative_residual});
  return rep;
}

double log_det(const ConductanceOperator& op) { return op.log_det(); }

double h_minus_one_norm(const VertexFunction& g, const LatticeBox& cube) {
  const auto op = ConductanceOperator::unit(cube, BoundaryMode::dirichlet);
  VertexFunction b(cube);
  bool nonzero = false;
  for (const auto& x : op.unknowns()) {
    b(x) = g(x);
    nonzero = nonzero || g(x) != 0.0;
  }
  if (!nonzero) return 0.0;
  const VertexFunction zero(cube);
  const auto rep = op.solve(nullptr, &b, &zero);
  if (rep.relative_residual > op.options().tolerance)
    throw SolverError("H^-1 solve residual above tolerance", {rep.relative_residual});
  return std::sqrt(op.energy(rep.solution) / cube.volume());
}

double h_minus_one_norm(const EdgeFunction& g, const LatticeBox& cube) {
  double s = 0.0;
  for (int i = 0; i < cube.dim(); ++i) {
    VertexFunction gi(cube);
    for (const auto& e : enumerate_edges(cube))
      if (e.axis == i) gi(e.base) = g(e);
    const double v = h_minus_one_norm(gi, cube);
    s += v * v;
  }
  return std::sqrt(s);
}

double cube_mean(const VertexFunction& u, const LatticeBox& cube) {
  double s = 0.0;
  const auto sites = cube.owned_sites();
  for (const auto& x : sites) s += u(x);
  return s / static_cast<double>(sites.size());
}

namespace {

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

template <class MeanSq>
MultiscalePoincareReport assemble_mp(const LatticeBox& cube, double lhs, MeanSq mean_sq) {
  if (!cube.side_log3() || cube.convention() != CubeConvention::half_open_triadic)
    throw DomainError("multiscale_poincare_check needs a half-open triadic cube");
  const int m = *cube.side_log3();
  MultiscalePoincareReport rep;
  rep.lhs = lhs;
  rep.mean_term = static_cast<double>(pow3(m)) * std::sqrt(mean_sq(cube));
  rep.rhs = rep.mean_term;
  for (int n = 0; n < m; ++n) {
    const auto cubes = subcubes(cube, n);
    double s = 0.0;
    for (const auto& c : cubes) s += mean_sq(c);
    const double term = static_cast<double>(pow3(n)) * std::sqrt(s / static_cast<double>(cubes.size()));
    rep.scale_terms.push_back(term);
    rep.rhs += term;
  }
  rep.ratio = rep.lhs == 0.0 ? 0.0 : rep.lhs / rep.rhs;
  return rep;
}

}  // namespace

MultiscalePoincareReport multiscale_poincare_check(const VertexFunction& u, const LatticeBox& cube) {
  return assemble_mp(cube, h_minus_one_norm(u, cube), [&](const LatticeBox& c) {
    const double mu = cube_mean(u, c);
    return mu * mu;
  });
}

MultiscalePoincareReport multiscale_poincare_check(const EdgeFunction& u, const LatticeBox& cube) {
  return assemble_mp(cube, h_minus_one_norm(u, cube), [&](const LatticeBox& c) {
    std::array<double, kMaxDim> sum{};
    const auto edges = enumerate_edges(c);
    for (const auto& e : edges) sum[static_cast<std::size_t>(e.axis)] += u(e);
    double s = 0.0;
    for (int i = 0; i < c.dim(); ++i) {
      const double mu = sum[static_cast<std::size_t>(i)] / c.volume();
      s += mu * mu;
    }
    return s;
  });
}

}  // namespace soslab
