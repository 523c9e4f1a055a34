#pragma once

// Bad-conductance clusters, good cubes, tail and inverse-moment statistics.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "soslab/cluster.hpp"
#include "soslab/field.hpp"
#include "soslab/stats.hpp"

namespace soslab {

inline constexpr double kDefaultThreshold = 5.0;

// Union-find over the edges with |τ_e| > t. Independent of edge order.
ClusterDecomposition decompose_clusters(const TauField& tau, double t);

struct GoodCubeReport {
  std::string cube;
  // Σ over clusters meeting the enlarged cube of diam^{d+2}.
  double diam_moment = 0.0;
  double diam_bound = 0.0;  // |□_n| / 100
  std::map<int, double> inverse_moment_ratios;  // p ↦ (mean a^{-p})^{-1/p} / (½⟨a^{-p}⟩^{-1/p})
  bool rare_high_conductance = true;
  bool inverse_moments_ok = true;
  bool good = true;
  std::string failing_condition;  // "", "rarity of high conductances", "inverse moments"
};

// The enlargement is the concentric cube one scale up; it must lie inside
// the box of `clusters`. The inverse-moment mean runs over the edges of the
// cube. `reference` maps p to ⟨a^{-p}⟩.
GoodCubeReport classify_good_cube(const TauField& tau, const ClusterDecomposition& clusters, const LatticeBox& cube,
                                  const std::map<int, double>& reference);
GoodCubeReport classify_good_cube(const TauField& tau, const LatticeBox& cube, double t,
                                  const std::map<int, double>& reference);

// Fraction of good cubes among the half-open triadic cubes of scale n that,
// together with their enlargement, fit in the field box.
struct GoodFraction {
  int scale = 0;
  std::size_t cubes = 0;
  std::size_t good = 0;
};
GoodFraction good_cube_fraction(const TauField& tau, const ClusterDecomposition& clusters, int n,
                                const std::map<int, double>& reference);

using EdgeSet = std::vector<Edge>;

// Straight paths of 1..max_length edges along axis 0 through the centre of the box,
// translated over all positions whose path fits at least `margin` sites from the boundary.
std::vector<EdgeSet> straight_path_family(const LatticeBox& box, int max_length, std::int64_t margin = 1);

struct TailEntry {
  double threshold = 0.0;
  std::size_t size = 0;   // |C|
  std::size_t hits = 0;   // over all sets of this size and all samples
  std::size_t trials = 0;
  double probability = 0.0;
  bool bound_only = false;  // no hit: probability holds the rule-of-three bound
};

struct TailFit {
  double threshold = 0.0;
  double alpha = 0.0;  // −slope of log-probability in |C|
  double alpha_se = 0.0;
  std::size_t points = 0;
};

struct TailReport {
  std::vector<TailEntry> high;  // ∏ 1{τ_e ≥ t}
  std::vector<TailEntry> low;   // ∏ 1{τ_e ≤ −t}
  std::vector<TailFit> high_fit;
  std::vector<TailFit> low_fit;
  double single_edge_bad = 0.0;  // P(|τ_e| > t) at the first threshold
};

// Requires at least 100 samples.
TailReport tail_statistics(std::span<const TauField> samples, std::span<const double> thresholds,
                           std::span<const EdgeSet> paths);

struct MomentEstimate {
  int k = 0;  // ⟨a^{-k}⟩; negative k means the positive moment ⟨a^{|k|}⟩
  stats::Estimate estimate;
  stats::Estimate half_estimate;  // first half of the samples
  bool stable = true;             // Cauchy criterion at 3σ between halves and full
  double tail_index = 0.0;        // Hill estimate of the tail index of a^{-k}
  std::string verdict;            // "finite" or "divergence suspected"
};

// Estimates ⟨a^{-k}⟩ from per-sample conductances of one edge.
std::vector<MomentEstimate> estimate_inverse_moments(std::span<const double> tau_samples, std::span<const int> ks);

struct LargeScalePoincare {
  double lhs = 0.0;  // mean over owned sites of |u − (u)|²
  double rhs = 0.0;  // diam² · |U|^{-1} Σ_{E(U)} a (∇u)²
  double ratio = 0.0;
};

// The enlarged cube must lie in the τ box. Constant u gives ratio 0; zero
// energy with non-constant u gives an infinite ratio.
LargeScalePoincare large_scale_poincare_check(const TauField& tau, const VertexFunction& u, const LatticeBox& cube);

}  // namespace soslab
