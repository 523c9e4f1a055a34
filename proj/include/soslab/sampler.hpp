#pragma once

// Samplers for the finite-volume measures on Q_L with zero boundary data:
// heat-bath for the φ-marginal at δ = 0, the exact product sampler for
// τ | ∇φ, Gaussian resampling of φ | τ, and the alternating joint chain.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "soslab/field.hpp"
#include "soslab/lattice.hpp"
#include "soslab/rng.hpp"

namespace soslab {

// Weight exp(−Σ_e (δ + (∇φ)²)e^τ − e^{−τ} − τ/2) integrates to a φ-marginal
// with edge weight exp(−2√(δ + (∇φ)²)) and a Gaussian φ | τ with precision
// 2·D_L(τ). These two factors are the model values of the heat-bath coupling
// and of the precision scale.
inline constexpr double kModelCoupling = 2.0;
inline constexpr double kModelPrecisionScale = 2.0;

enum class SamplerKind { phi_heatbath, joint_alternating };

std::string to_string(SamplerKind k);
SamplerKind sampler_kind_from_string(const std::string& s);

struct SamplerConfig {
  int dim = 2;
  double delta = 0.0;
  std::int64_t L = 8;
  std::uint64_t seed = 1;
  int burn_in = 1000;
  int thinning = 10;
  int n_samples = 100;
  SamplerKind kind = SamplerKind::joint_alternating;
  std::uint64_t chain = 0;

  // Throws DomainError naming the offending field.
  void validate() const;
};

// Exact draw from density ∝ exp(−β Σ_j |v − c_j|).
double heatbath_phi_site(std::span<const double> neighbours, double beta, RngStream& rng);
// Same, reading the 2d neighbours of interior site x.
double heatbath_phi_site(const VertexFunction& phi, const Coord& x, double beta, RngStream& rng);

// Exact draw from density ∝ exp(−z e^τ − e^{−τ} − τ/2), z = δ + g².
double sample_tau_given_gradient(double g, double delta, RngStream& rng);
// The symmetrised step alone, s ↦ 2 asinh(u / (2 z^{1/4})); exposed for tests.
double tau_substitution(double u, double z);

// Gaussian field on the interior of Q_L with precision κ·D_L(τ), zero on the
// boundary. The sparsity pattern is analysed once per box.
class GaussianFieldSampler {
 public:
  GaussianFieldSampler(const LatticeBox& box, double precision_scale = kModelPrecisionScale);
  GaussianFieldSampler(GaussianFieldSampler&&) noexcept;
  GaussianFieldSampler& operator=(GaussianFieldSampler&&) noexcept;
  ~GaussianFieldSampler();

  // Factorises κ·D_L(τ). Throws SolverError on failure.
  void set_conductances(const TauField& tau);
  PhiField sample(RngStream& rng) const;
  // Interior sites in the order of the Gaussian vector.
  const std::vector<Coord>& interior() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

PhiField resample_phi_given_tau(const TauField& tau, RngStream& rng, double precision_scale = kModelPrecisionScale);

struct ChainSample {
  PhiField phi;
  TauField tau;
  std::int64_t sweep = 0;
};

class Chain {
 public:
  explicit Chain(const SamplerConfig& config);
  Chain(Chain&&) noexcept;
  ~Chain();

  void sweep();
  std::int64_t sweeps_done() const { return sweeps_; }
  const PhiField& phi() const { return phi_; }
  // τ of the joint chain; for the heat-bath chain a fresh exact draw of
  // τ | ∇φ keyed by the current sweep.
  TauField tau() const;
  const SamplerConfig& config() const { return config_; }

 private:
  void heatbath_sweep();
  void joint_sweep();

  SamplerConfig config_;
  LatticeBox box_;
  PhiField phi_;
  TauField tau_;
  std::vector<Edge> edges_;
  std::unique_ptr<GaussianFieldSampler> gauss_;
  std::int64_t sweeps_ = 0;
};

// Burn-in, then n_samples samples separated by `thinning` sweeps. The
// callback (if given) sees each sample instead of it being stored.
std::vector<ChainSample> run_chain(const SamplerConfig& config,
                                   const std::function<void(const ChainSample&)>& on_sample = {});

}  // namespace soslab
