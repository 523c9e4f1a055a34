#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "soslab/commands.hpp"
#include "soslab/errors.hpp"

namespace {

int run(soslab::ExperimentConfig c) {
  try {
    const auto o = soslab::run_command(c);
    for (const auto& f : o.files)
      if (f.rfind("snapshots/", 0) != 0) std::cout << "wrote " << f << "\n";
    for (const auto& m : o.messages) (o.exit_code ? std::cerr : std::cout) << m << "\n";
    return o.exit_code;
  } catch (const soslab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return soslab::kExitValidation;
  } catch (const soslab::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return soslab::kExitValidation;
  } catch (const soslab::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return soslab::kExitNumerical;
  } catch (const soslab::StatisticsError& e) {
    std::cerr << "statistics failure: " << e.what() << "\n";
    return soslab::kExitNumerical;
  } catch (const soslab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return soslab::kExitIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for the Coulomb-gas representation of the discrete Gaussian SOS model"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> tolerance;
  app.add_option("--config", config_path, "INI experiment file (defaults apply when omitted)");
  app.add_option("--seed", seed, "overrides [run] seed");
  app.add_option("--out", out, "existing output directory (overrides [run] out)");
  app.add_option("--threads", threads, "worker threads (overrides [run] threads and SOS_LAB_THREADS)");
  app.add_option("--tolerance", tolerance, "overrides [solver] tolerance");

  for (const char* name : {"sample", "estimate-ahom", "percolation", "clt", "oracle-check"}) app.add_subcommand(name);

  CLI11_PARSE(app, argc, argv);

  soslab::ExperimentConfig c;
  try {
    if (!config_path.empty()) c = soslab::load_config(config_path);
  } catch (const soslab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return soslab::kExitValidation;
  } catch (const soslab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return soslab::kExitIo;
  }
  c.command = app.get_subcommands().front()->get_name();
  if (seed) c.seed = *seed;
  if (!out.empty()) c.out = out;
  if (tolerance) c.tolerance = *tolerance;
  if (threads) {
    c.threads = *threads;
  } else if (const char* env = std::getenv("SOS_LAB_THREADS")) {
    try {
      c.threads = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "config error: SOS_LAB_THREADS is not an integer: " << env << "\n";
      return soslab::kExitValidation;
    }
  }
  return run(c);
}
