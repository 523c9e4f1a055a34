#pragma once

// Subadditive energies ν(U, p), ν*(U, q), the coarse-grained matrices ā(U),
// ā_*(U) and the structural inequalities between them.

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "soslab/cluster.hpp"
#include "soslab/elliptic.hpp"
#include "soslab/field.hpp"
#include "soslab/stats.hpp"

namespace soslab {

using Vec = std::array<double, kMaxDim>;

// ℓ̂_{e_i} on the whole field box; ℓ̂_p = Σ p_i ℓ̂_{e_i}. A cluster with no
// boundary vertex in the box has no hat value; reading a site of such a
// cluster raises DegenerateClusterError.
class AffineHats {
 public:
  explicit AffineHats(const ClusterDecomposition& clusters);
  double operator()(const Coord& x, const Vec& p) const;

 private:
  int dim_ = 0;
  std::array<VertexFunction, kMaxDim> hats_;
};

// Dirichlet and natural-boundary operators of one region for one τ sample,
// factorized once and reused for every p and q.
class CubeProblem {
 public:
  CubeProblem(const TauField& tau, const AffineHats& hats, const LatticeBox& region, SolverOptions options = {});

  const LatticeBox& region() const { return region_; }
  const TauField& tau() const { return *tau_; }
  double tolerance() const { return options_.tolerance; }

  // ℓ̂_p on the region.
  VertexFunction hat_affine(const Vec& p) const;
  // Minimiser v(·, U, p) and ν(U, p).
  VertexFunction nu_minimizer(const Vec& p) const;
  double nu(const Vec& p) const;
  // Maximiser u(·, U, q) (mean zero) and ν*(U, q).
  VertexFunction nu_star_maximizer(const Vec& q) const;
  double nu_star(const Vec& q) const;

  // (1/|U|) Σ_{E(U)} ½ a (∇w)².
  double energy(const VertexFunction& w) const;
  // Per-direction averages (1/|U|) Σ_{e ∈ E(U), axis i} ∇w(e) and a∇w(e).
  Vec mean_gradient(const VertexFunction& w) const;
  Vec mean_flux(const VertexFunction& w) const;

 private:
  const TauField* tau_;
  const AffineHats* hats_;
  LatticeBox region_;
  SolverOptions options_;
  ConductanceOperator dirichlet_;
  ConductanceOperator natural_;
};

// Values of a quadratic form at e_i (diag) and e_i + e_j (cross, i < j in
// row-major order of pairs).
struct QuadraticValues {
  int dim = 0;
  std::vector<double> diag;
  std::vector<double> cross;
};

// M_ii = 2 value(e_i), M_ij = value(e_i + e_j) − value(e_i) − value(e_j).
Eigen::MatrixXd reconstruct_matrix(const QuadraticValues& values);

struct QuadraticityCheck {
  Eigen::MatrixXd matrix;
  double residual = 0.0;  // max relative mismatch of direct values vs ½pᵀMp over test vectors
};

QuadraticValues sample_nu(const CubeProblem& problem);
QuadraticValues sample_nu_star(const CubeProblem& problem);
// Polarisation plus direct checks at 2e_1, e_i − e_j and `extra` vectors.
QuadraticityCheck check_nu_quadratic(const CubeProblem& problem, std::span<const Vec> extra = {});
QuadraticityCheck check_nu_star_quadratic(const CubeProblem& problem, std::span<const Vec> extra = {});

double compute_nu(const TauField& tau, const ClusterDecomposition& clusters, const LatticeBox& region, const Vec& p);
double compute_nu_star(const TauField& tau, const LatticeBox& region, const Vec& q);

struct CoarseMatrices {
  Eigen::MatrixXd a_bar;       // ā(U)
  Eigen::MatrixXd a_bar_star;  // ā_*(U)
  double nu_residual = 0.0;
  double nu_star_residual = 0.0;
};

CoarseMatrices coarse_matrices(const CubeProblem& problem);

// Signed residuals; each is ≤ slack when the inequality holds.
struct InequalityResiduals {
  double nu_subadditivity = 0.0;       // ν(U, p) − Σ |U_i|/|U| ν(U_i, p), max over test p
  double nu_star_superadditivity = 0.0;  // ν*(U, q) − Σ |U_i|/|U| ν*(U_i, q), max over test q
  std::size_t interface_edges = 0;     // |E′|
  double energy_lower_bound = 0.0;     // ½ ḡ·ā_* ḡ − E[v], ḡ = mean ∇v of the ν minimiser
  double spatial_flux = 0.0;           // max_i |mean a∇u − q_i|
  double spatial_gradient = 0.0;       // max_i |mean ∇u − (ā_*^{-1} q)_i|
  double fenchel = 0.0;                // p·q − |G||q| − (ν + ν*), G = mean(∇ℓ̂_p − ∇ℓ_p)
  double fenchel_identity = 0.0;       // |(ν + ν* lower bound) − (p·q + q·G)| for the ν minimiser
  double slack = 0.0;                  // 100 × tolerance × scale
  bool ok() const;
};

InequalityResiduals check_inequalities(const TauField& tau, const ClusterDecomposition& clusters,
                                       const LatticeBox& parent, std::span<const LatticeBox> children,
                                       std::span<const Vec> test_vectors, SolverOptions options = {});

// ε_n = 2 e ‖ā_*‖ / λ_min(ā) with e = ‖p ↦ mean(∇ℓ̂_p − ∇ℓ_p)‖; Fenchel
// implies ā_* ≼ (1 + ε_n) ā.
struct DualityOrdering {
  double epsilon = 0.0;
  double hat_error = 0.0;  // e
  double max_ratio = 0.0;  // λ_max(ā^{-1/2} ā_* ā^{-1/2})
  bool ok(double slack) const { return max_ratio <= 1.0 + epsilon + slack; }
};

DualityOrdering duality_ordering(const CubeProblem& problem, const CoarseMatrices& m);

struct ScaleEntry {
  int scale = 0;
  std::size_t cubes = 0;
  Eigen::MatrixXd a_bar;       // average over the subcubes
  Eigen::MatrixXd a_bar_star;
  double gap = 0.0;             // mean over subcubes of ‖ā(cube) − ā_*(cube)‖_F
  double max_quadratic_residual = 0.0;
  double min_eigenvalue = 0.0;  // min over subcubes and both matrices
  double epsilon = 0.0;         // max over subcubes of ε_n
  double ordering_ratio = 0.0;  // max over subcubes of λ_max(ā^{-1/2} ā_* ā^{-1/2})
  bool ordering_ok = true;
};

// Per-sample matrices at scales 1..n_max, averaged over the scale-n subcubes
// of the central half-open cube of scale n_max. Needs that cube's enlargement
// inside the field box.
std::vector<ScaleEntry> scale_sweep_sample(const TauField& tau, const ClusterDecomposition& clusters, int n_max,
                                           SolverOptions options = {});

struct ScaleSummary {
  int scale = 0;
  std::vector<stats::Estimate> a_bar;       // row-major d×d
  std::vector<stats::Estimate> a_bar_star;
  stats::Estimate gap;                      // per-sample ScaleEntry::gap
  stats::Estimate scalar;                   // √(tr ā · tr ā_*) / d
  double min_eigenvalue = 0.0;
  double max_quadratic_residual = 0.0;
  std::size_t ordering_violations = 0;
};

std::vector<ScaleSummary> summarize_sweep(const std::vector<std::vector<ScaleEntry>>& per_sample);

// Central half-open cube of scale n.
LatticeBox central_cube(int dim, int n);

// Profile 3^{-n} ‖∇u(·, □_n, ā_*(□_n)p) − ∇ℓ̂_p‖_{H^{-1}(□_n)} over n = 1..n_max.
std::vector<double> corrector_flatness(const TauField& tau, const ClusterDecomposition& clusters, int n_max,
                                       const Vec& p, SolverOptions options = {});

// Mean of ν over the d! simplexes of a half-open cube versus ν on the cube.
struct SimplexComparison {
  double cube = 0.0;
  double simplex_mean = 0.0;
  std::vector<double> simplexes;
};

SimplexComparison simplex_nu(const TauField& tau, const ClusterDecomposition& clusters, int n, const Coord& corner,
                             const Vec& p);

}  // namespace soslab
