#pragma once

// Conductance Laplacians on lattice regions, Dirichlet and natural-boundary
// solves, log-determinants and discrete H⁻¹ norms.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>
#include <vector>

#include "soslab/field.hpp"
#include "soslab/lattice.hpp"

namespace soslab {

enum class BoundaryMode { dirichlet, natural };
enum class SolverKind { cholesky, pcg_jacobi };

struct SolverOptions {
  SolverKind kind = SolverKind::cholesky;
  double tolerance = 1e-10;
  int max_iterations = 200000;
};

struct SolveReport {
  VertexFunction solution;
  // Normwise backward error ‖b − Ax‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞).
  double relative_residual = 0.0;
  int iterations = 0;
  double wall_time = 0.0;
  std::vector<double> residual_history;
};

using Conductance = std::function<double(const Edge&)>;

// Quadratic form Σ_{e ∈ E(U)} a(e) ∇v(e) ∇w(e) on a region U. In Dirichlet
// mode the unknowns are the non-boundary sites of U; in natural mode all sites
// touched by an edge of U, modulo constants.
class ConductanceOperator {
 public:
  ConductanceOperator(const LatticeBox& region, const TauField& tau, BoundaryMode mode, SolverOptions options = {});
  ConductanceOperator(const LatticeBox& region, const Conductance& a, BoundaryMode mode, SolverOptions options = {});
  static ConductanceOperator unit(const LatticeBox& region, BoundaryMode mode, SolverOptions options = {});

  ConductanceOperator(ConductanceOperator&&) noexcept;
  ConductanceOperator& operator=(ConductanceOperator&&) noexcept;
  ~ConductanceOperator();

  const LatticeBox& region() const { return region_; }
  BoundaryMode mode() const { return mode_; }
  const SolverOptions& options() const { return options_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<double>& conductances() const { return cond_; }
  std::size_t unknown_count() const { return unknowns_.size(); }
  // Lattice sites of the unknowns, in matrix order.
  const std::vector<Coord>& unknowns() const { return unknowns_; }
  bool is_fixed(const Coord& x) const;

  double form(const VertexFunction& v, const VertexFunction& w) const;
  double energy(const VertexFunction& v) const { return form(v, v); }

  // Stiffness matrix on the unknowns (natural mode: all touched sites, singular).
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

  // Minimiser of ½Σ a(∇v)² − Σ_e h(e)∇v(e) − Σ_x b(x)v(x): v = g on fixed
  // sites (Dirichlet) or v mean-zero over the unknowns (natural). Any of the
  // inputs may be null.
  SolveReport solve(const EdgeFunction* h, const VertexFunction* b, const VertexFunction* g) const;

  // log det of the Dirichlet stiffness matrix.
  double log_det() const;

 private:
  void build(const Conductance& a);
  void factorize() const;
  int local(const Coord& x) const;

  LatticeBox region_;
  BoundaryMode mode_;
  SolverOptions options_;
  BoxIndexer ix_;
  std::vector<Edge> edges_;
  std::vector<double> cond_;
  std::vector<Coord> unknowns_;
  std::vector<int> unknown_of_site_;  // per bounding-box site: unknown index, -1 fixed, -2 absent
  Eigen::SparseMatrix<double> matrix_;
  double matrix_norm_ = 0.0;
  struct Factor;
  mutable std::unique_ptr<Factor> factor_;
};

// ∇·a∇u = rhs on the unknowns, u = g on the boundary.
SolveReport solve_dirichlet(const ConductanceOperator& op, const VertexFunction& rhs, const VertexFunction& g);
// ∇·a∇u = ∇·f, u = g on the boundary; the divergence is taken by summation by
// parts over E(U) so that Σ a∇u∇w = Σ f∇w holds for every admissible w.
SolveReport solve_dirichlet_divergence(const ConductanceOperator& op, const EdgeFunction& f, const VertexFunction& g);
// Maximiser of Σ(−½∇v·a∇v + q·∇v) over E(U), mean zero over the unknowns.
SolveReport solve_neumann_variational(const ConductanceOperator& op, const std::array<double, kMaxDim>& q);

double log_det(const ConductanceOperator& op);

// Volume-normalised dual norm: solve −Δw = g in U with w = 0 on ∂U and
// return ((1/|U|) Σ_{E(U)} (∇w)²)^{1/2}.
double h_minus_one_norm(const VertexFunction& g, const LatticeBox& cube);
// Edge functions are treated componentwise (component i read at the base
// vertex of the i-edge).
double h_minus_one_norm(const EdgeFunction& g, const LatticeBox& cube);

struct MultiscalePoincareReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::vector<double> scale_terms;  // 3^n (avg |(u)_{y+□_n}|²)^{1/2}, n = 0..m−1
  double mean_term = 0.0;           // 3^m |(u)_{□_m}|
};

// Cube must be half-open triadic; subcube means use the owned vertices.
MultiscalePoincareReport multiscale_poincare_check(const VertexFunction& u, const LatticeBox& cube);
MultiscalePoincareReport multiscale_poincare_check(const EdgeFunction& u, const LatticeBox& cube);

// Mean of u over the owned vertices of a cube.
double cube_mean(const VertexFunction& u, const LatticeBox& cube);

}  // namespace soslab
