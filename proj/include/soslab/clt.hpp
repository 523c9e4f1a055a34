#pragma once

// Variance of F_R by three routes, Gaussian moment structure, Brascamp–Lieb
// domination and the energy convergence of the homogenized problem.

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "soslab/elliptic.hpp"
#include "soslab/field.hpp"
#include "soslab/sampler.hpp"
#include "soslab/stats.hpp"

namespace soslab {

struct VarianceEstimate {
  stats::Estimate variance;
  stats::Estimate mean;
  std::size_t n = 0;
  std::size_t failures = 0;
  std::vector<double> per_sample;  // F_R values, or (f_R, ∇u)_R / κ; NaN marks a failed solve
};

inline constexpr std::size_t kMinCltSamples = 100;

std::vector<double> sample_F_R(std::span<const PhiField> phi, const TestVectorField& f);

VarianceEstimate variance_direct(std::span<const double> F_values);
VarianceEstimate variance_direct(std::span<const PhiField> phi, const TestVectorField& f);

// (f_R, ∇u)_R for one τ, u solving ∇·a∇u = ∇·f_R on Q_L with u = 0 on ∂Q_L.
double tau_route_energy(const TauField& tau, const TestVectorField& f, SolverOptions options = {});

// Per sample (f_R, ∇u)_R / κ; the mean estimates Var[F_R]. Solver failures
// are counted and kept as NaN entries.
VarianceEstimate variance_tau_route(std::span<const TauField> tau, const TestVectorField& f,
                                    double precision_scale = kModelPrecisionScale, SolverOptions options = {});

struct GffQuadratureOptions {
  int grid = 0;    // points per axis at the coarse level; 0 picks a default per dimension
  int levels = 2;  // resolutions, each doubling the grid
};

struct GffPrediction {
  double value = 0.0;        // finest level
  double error = 0.0;        // |finest − previous level|
  std::vector<double> raw;   // one value per level
  std::vector<int> grids;
};

// ∫∫ ∇·f(x) G_ā(x − y) ∇·f(y) dx dy, G_ā the fundamental solution of −∇·ā∇.
GffPrediction gff_quadrature(const Eigen::MatrixXd& a_bar, const TestVectorField& f, GffQuadratureOptions options = {});
double predict_gff_variance(const Eigen::MatrixXd& a_bar, const TestVectorField& f, GffQuadratureOptions options = {});
double predict_gff_variance(double a_bar, const TestVectorField& f, GffQuadratureOptions options = {});

// Independent d = 2 route for scalar ā: angular Fourier modes of ∇·f and the
// multipole expansion of the logarithmic kernel, Gauss–Legendre in radius.
double gff_variance_real_space(double a_bar, const TestVectorField& f, int radial_nodes = 48, int angles = 64);

// Same quadratic form for −∇·ā∇ on the box [−B, B]^d with zero Dirichlet data
// (sine series); ā must be diagonal. grid = 0 picks about 128 points per unit length.
double gff_variance_box(const Eigen::MatrixXd& a_bar, const TestVectorField& f, double half_side, int grid = 0);

struct BrascampLiebSample {
  double lhs = 0.0;  // v·G_a v
  double rhs = 0.0;  // Σ_e (∇Δ⁻¹v)² e^{−τ_e}
  bool violated = false;
};

struct BrascampLiebMoment {
  int k = 1;
  stats::Estimate moment;       // ⟨(Σ φ v)^{2k}⟩
  double bound = 0.0;           // C_k (Σ_e (∇Δ⁻¹v)²)^k
  double C_k = 0.0;
  std::string verdict;          // "consistent" / "inconsistent" at the 3σ level
};

struct BrascampLiebReport {
  std::vector<BrascampLiebSample> samples;
  std::size_t violations = 0;
  double min_margin = 0.0;      // min (rhs − lhs) / max(rhs, tiny)
  double dirichlet_energy = 0.0;  // Σ_e (∇Δ⁻¹v)²
  std::vector<BrascampLiebMoment> moments;
};

// v lives on Q_L, vanishes on ∂Q_L and sums to zero.
VertexFunction dipole(const LatticeBox& box, const Coord& at, int axis);

BrascampLiebSample brascamp_lieb_sample(const TauField& tau, const VertexFunction& v, SolverOptions options = {});
BrascampLiebReport brascamp_lieb_check(std::span<const TauField> tau, const VertexFunction& v,
                                       SolverOptions options = {});
// Adds the moment-level comparison for k = 1..k_max using the φ of the samples
// and the inverse moments ⟨e^{−kτ_e}⟩ estimated from their τ.
BrascampLiebReport brascamp_lieb_check(std::span<const ChainSample> samples, const VertexFunction& v, int k_max,
                                       double precision_scale = kModelPrecisionScale, SolverOptions options = {});

struct MomentStructure {
  stats::Estimate m1;
  stats::Estimate m3;
  stats::Estimate m2;
  std::vector<stats::Estimate> even_moments;  // central m_{2k}, k = 2..k_max
  std::vector<stats::Estimate> wick_ratios;   // m_{2k}/((2k−1)!! m₂^k), k = 2..k_max
};

// Needs at least kMinCltSamples · k_max values.
MomentStructure moment_structure(std::span<const double> F_values, int k_max = 3);

struct EnergyLevel {
  double R = 1.0;
  std::vector<TauField> tau;
};

struct EnergyPoint {
  double R = 0.0;
  std::int64_t L = 0;
  stats::Estimate energy;  // ⟨(∇u_R, a∇u_R)_R⟩
  double continuum = 0.0;  // (∇ū, ā∇ū)
  stats::Estimate gap;     // energy − continuum
  // Same continuum problem on [−L/R, L/R]^d with zero boundary data (diagonal
  // ā only; NaN otherwise), isolating the lattice discretization error.
  double continuum_box = std::numeric_limits<double>::quiet_NaN();
  stats::Estimate box_gap{std::numeric_limits<double>::quiet_NaN(), 0.0};
  std::size_t failures = 0;
};

struct EnergyProfile {
  std::vector<EnergyPoint> points;
  double continuum_coarse = 0.0;  // two quadrature resolutions of (∇ū, ā∇ū)
  double continuum_fine = 0.0;
  double resolution_gap = 0.0;    // relative difference
  bool last_two_non_increasing = false;
};

// f is given at unit scale; each level uses f(·/R) on its τ box.
EnergyProfile energy_convergence(std::span<const EnergyLevel> levels, const TestVectorField& f,
                                 const Eigen::MatrixXd& a_bar, SolverOptions options = {});

struct CltReport {
  int dim = 2;
  double R = 0.0;
  std::int64_t L = 0;
  double delta = 0.0;
  std::size_t n_samples = 0;
  VarianceEstimate var_direct;
  VarianceEstimate var_tau;
  double a_bar = 0.0;
  double var_gff = 0.0;  // prediction for F_R with precision κ ā
  MomentStructure moments;
  BrascampLiebReport brascamp_lieb;
  double route_z = 0.0;  // |var_direct − var_tau| / combined σ
  bool routes_consistent = false;
};

CltReport clt_report(std::span<const ChainSample> samples, const TestVectorField& f, double a_bar, double delta,
                     int bl_k_max = 2, double precision_scale = kModelPrecisionScale, SolverOptions options = {});

}  // namespace soslab
