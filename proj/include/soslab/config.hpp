#pragma once

// Experiment configuration: an INI file with fixed sections and keys. Unknown
// sections or keys are errors; the canonical text form round-trips exactly.

#include <cstdint>
#include <string>
#include <vector>

#include "soslab/elliptic.hpp"
#include "soslab/sampler.hpp"

namespace soslab {

struct ExperimentConfig {
  // [run]
  std::string command;
  std::uint64_t seed = 1;
  std::string out = ".";
  int threads = 1;

  // [model]
  int dim = 2;
  std::int64_t L = 8;
  double delta = 0.0;

  // [sampler]
  SamplerKind sampler = SamplerKind::joint_alternating;
  int burn_in = 1000;
  int thinning = 10;
  int n_samples = 100;
  int chains = 1;

  // [solver]
  SolverKind solver = SolverKind::cholesky;
  double tolerance = 1e-10;
  int max_iterations = 200000;

  // [percolation]
  double threshold = 5.0;
  std::vector<double> thresholds{3, 4, 5, 6, 7};
  int max_path_length = 3;
  int good_cube_scales = 3;
  std::vector<double> inverse_moments{1, 2, 4, -1};

  // [coarsegrain]
  double cg_threshold = 5.0;
  int n_max = 2;
  int cg_samples = 0;  // 0: every sample
  int flatness_samples = 1;

  // [clt]
  double R = 8.0;
  double a_bar = 0.0;  // 0: estimate from the samples
  int bl_k = 2;
  std::vector<double> energy_R;
  double energy_ratio = 8.0;
  int energy_samples = 100;

  // [oracle]
  int ks_draws = 100000;
  int tree_fields = 20;

  // [input]
  std::string snapshots;  // directory written by `sample`; empty: sample inline

  SamplerConfig sampler_config(std::uint64_t chain = 0) const;
  SolverOptions solver_options() const;

  // Throws ConfigError naming the offending "[section] key".
  void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Canonical text: every section and key in schema order, shortest round-trip
// number formatting.
std::string to_ini(const ExperimentConfig& c);

struct ConfigKey {
  std::string section;
  std::string key;
  std::string description;
};
const std::vector<ConfigKey>& config_schema();

}  // namespace soslab
