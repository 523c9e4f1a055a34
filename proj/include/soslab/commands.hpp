#pragma once

// The five experiment commands behind the sos_lab executable.

#include <functional>
#include <string>
#include <vector>

#include "soslab/coarsegrain.hpp"
#include "soslab/config.hpp"
#include "soslab/io.hpp"
#include "soslab/sampler.hpp"

namespace soslab {

struct CommandOutcome {
  int exit_code = 0;
  std::vector<std::string> files;     // relative to the output directory
  std::vector<std::string> messages;  // one line each, for the terminal
};

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitIo = 3;

// Canonical config with `out` and `threads` reset, so it names the experiment
// rather than where or how fast it ran; config_hash is its git blob hash.
std::string portable_config(const ExperimentConfig& c);
std::string config_hash(const ExperimentConfig& c);
Provenance provenance(const ExperimentConfig& c);

// Runs fn(0..n−1) on up to `threads` workers. The first exception by index is
// rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// Samples from [input] snapshots if set, otherwise from `chains` chains run inline.
std::vector<ChainSample> acquire_samples(const ExperimentConfig& c);

// Largest n ≤ n_max whose central cube and its enlargement fit in Q_L (0 if none).
int fitting_scale(int dim, std::int64_t L, int n_max);

struct AhomEstimate {
  int n = 0;
  std::size_t samples = 0;
  std::size_t degenerate = 0;  // samples skipped with DegenerateClusterError
  std::vector<ScaleSummary> scales;
  double scalar = 0.0;         // √(tr ā · tr ā_*)/d at the largest scale
};
AhomEstimate estimate_ahom(std::span<const ChainSample> samples, const ExperimentConfig& c, int n);

CommandOutcome cmd_sample(const ExperimentConfig& c);
CommandOutcome cmd_estimate_ahom(const ExperimentConfig& c);
CommandOutcome cmd_percolation(const ExperimentConfig& c);
CommandOutcome cmd_clt(const ExperimentConfig& c);
CommandOutcome cmd_oracle_check(const ExperimentConfig& c);

// Dispatches on c.command after checking the output directory.
CommandOutcome run_command(const ExperimentConfig& c);

}  // namespace soslab
