#pragma once

// Brute-force reference implementations for tests. Nothing here calls the
// numerical kernels of the main library.

#include <cstddef>
#include <functional>
#include <vector>

#include "soslab/field.hpp"
#include "soslab/lattice.hpp"

namespace soslab::oracle {

inline constexpr std::size_t kDenseCap = 200;
inline constexpr std::size_t kTreeVertexCap = 12;

struct DenseProblem {
  std::size_t n = 0;
  std::vector<double> a;  // row-major n×n, symmetric
  std::vector<double> b;

  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

DenseProblem make_dense(std::size_t n);
std::vector<double> dense_solve(const DenseProblem& p);
std::vector<double> dense_inverse(const DenseProblem& p);  // row-major
double dense_log_det(const DenseProblem& p);
double relative_residual(const DenseProblem& p, const std::vector<double>& x);

// Conductance Laplacian restricted to the interior of a closed box, with
// boundary values eliminated (the Dirichlet stiffness matrix), assembled by
// direct neighbour loops. Interior sites in lexicographic order.
DenseProblem dirichlet_matrix(const LatticeBox& box, const std::function<double(const Edge&)>& a);

// Σ_T Π_{e∈T} a(e) over spanning trees of Q_L with its boundary wired into a
// single vertex, by contraction–deletion in extended precision.
long double enumerate_wired_spanning_trees(const LatticeBox& box, const TauField& tau);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss–Kronrod (7/15) on [a, b].
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-14,
                           double rel_tol = 1e-13);

// π^{-1/2} ∫ exp(−z e^t − e^{−t} − t/2) dt.
QuadratureResult quadrature_magic_identity(double z);

// CDF of the density ∝ exp(−z e^t − e^{−t} − t/2), evaluated at sorted
// points by accumulating quadrature over consecutive gaps.
std::vector<double> tau_cdf_sorted(double z, const std::vector<double>& sorted_points);
// ∫ w(t) ρ_z(t) dt for the normalised density.
double tau_expectation(double z, const std::function<double(double)>& w);

// Continuous density with log-density piecewise linear: slope slopes[k] on
// the k-th piece, pieces separated by sorted breakpoints (slopes.size() ==
// breakpoints.size() + 1), log-density 0 at the first breakpoint.
class PiecewiseExponential {
 public:
  PiecewiseExponential(std::vector<double> breakpoints, std::vector<double> slopes);

  double cdf(double x) const;
  double total_mass() const { return static_cast<double>(total_); }
  // CDF(+∞) after normalisation, from the per-piece closed forms.
  double cdf_at_infinity() const;
  double mean() const;
  double variance() const;

 private:
  long double piece_mass(std::size_t k, long double from, long double to) const;
  long double piece_moment(std::size_t k, int order) const;
  long double log_density_at(std::size_t k, long double x) const;

  std::vector<long double> bp_;
  std::vector<long double> slope_;
  std::vector<long double> level_;  // log-density at the left end of piece k (k ≥ 1)
  std::vector<long double> mass_;
  long double total_ = 0;
};

PiecewiseExponential piecewise_exponential_cdf(const std::vector<double>& breakpoints,
                                               const std::vector<double>& slopes);

// Conditional of one heat-bath site: density ∝ exp(−β Σ_j |v − c_j|).
PiecewiseExponential heatbath_conditional(std::vector<double> neighbours, double beta);

}  // namespace soslab::oracle
