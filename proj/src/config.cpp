#include "soslab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "soslab/errors.hpp"

namespace soslab {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& where, const std::string& text) {
  const auto s = trim(text);
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError(where + ": cannot parse '" + text + "' as a number");
  return v;
}

std::vector<double> parse_list(const std::string& where, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(where, item));
  return out;
}

struct Field {
  ConfigKey key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string& where, const std::string&)> set;
};

template <class T>
Field number(const char* section, const char* key, const char* desc, T ExperimentConfig::*m) {
  return {{section, key, desc},
          [m](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return fmt(c.*m);
            else
              return std::to_string(c.*m);
          },
          [m](ExperimentConfig& c, const std::string& w, const std::string& s) { c.*m = parse_number<T>(w, s); }};
}

Field text(const char* section, const char* key, const char* desc, std::string ExperimentConfig::*m) {
  return {{section, key, desc}, [m](const ExperimentConfig& c) { return c.*m; },
          [m](ExperimentConfig& c, const std::string&, const std::string& s) { c.*m = trim(s); }};
}

Field list(const char* section, const char* key, const char* desc, std::vector<double> ExperimentConfig::*m) {
  return {{section, key, desc}, [m](const ExperimentConfig& c) { return fmt_list(c.*m); },
          [m](ExperimentConfig& c, const std::string& w, const std::string& s) { c.*m = parse_list(w, s); }};
}

std::string solver_name(SolverKind k) { return k == SolverKind::cholesky ? "cholesky" : "pcg_jacobi"; }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    v.push_back(text("run", "command", "sample | estimate-ahom | percolation | clt | oracle-check", &ExperimentConfig::command));
    v.push_back(number("run", "seed", "master seed", &ExperimentConfig::seed));
    v.push_back(text("run", "out", "output directory (must exist)", &ExperimentConfig::out));
    v.push_back(number("run", "threads", "worker threads; results do not depend on it", &ExperimentConfig::threads));
    v.push_back(number("model", "dim", "dimension d", &ExperimentConfig::dim));
    v.push_back(number("model", "L", "box Q_L = [-L, L]^d", &ExperimentConfig::L));
    v.push_back(number("model", "delta", "regularisation δ ≥ 0", &ExperimentConfig::delta));
    v.push_back({{"sampler", "kind", "joint_alternating | phi_heatbath"},
                 [](const ExperimentConfig& c) { return to_string(c.sampler); },
                 [](ExperimentConfig& c, const std::string& w, const std::string& s) {
                   try {
                     c.sampler = sampler_kind_from_string(trim(s));
                   } catch (const std::exception&) {
                     throw ConfigError(w + ": unknown sampler '" + trim(s) + "'");
                   }
                 }});
    v.push_back(number("sampler", "burn_in", "sweeps discarded per chain", &ExperimentConfig::burn_in));
    v.push_back(number("sampler", "thinning", "sweeps between samples", &ExperimentConfig::thinning));
    v.push_back(number("sampler", "n_samples", "samples per chain", &ExperimentConfig::n_samples));
    v.push_back(number("sampler", "chains", "independent chains", &ExperimentConfig::chains));
    v.push_back({{"solver", "kind", "cholesky | pcg_jacobi"},
                 [](const ExperimentConfig& c) { return solver_name(c.solver); },
                 [](ExperimentConfig& c, const std::string& w, const std::string& s) {
                   const auto t = trim(s);
                   if (t == "cholesky")
                     c.solver = SolverKind::cholesky;
                   else if (t == "pcg_jacobi")
                     c.solver = SolverKind::pcg_jacobi;
                   else
                     throw ConfigError(w + ": unknown solver '" + t + "'");
                 }});
    v.push_back(number("solver", "tolerance", "relative residual target", &ExperimentConfig::tolerance));
    v.push_back(number("solver", "max_iterations", "iterative solver cap", &ExperimentConfig::max_iterations));
    v.push_back(number("percolation", "threshold", "bad-edge threshold t for good cubes", &ExperimentConfig::threshold));
    v.push_back(list("percolation", "thresholds", "tail thresholds", &ExperimentConfig::thresholds));
    v.push_back(number("percolation", "max_path_length", "longest path in the tail family", &ExperimentConfig::max_path_length));
    v.push_back(number("percolation", "good_cube_scales", "good-cube scales n = 1..N", &ExperimentConfig::good_cube_scales));
    v.push_back(list("percolation", "inverse_moments", "exponents k of <a^{-k}>", &ExperimentConfig::inverse_moments));
    v.push_back(number("coarsegrain", "threshold", "cluster threshold t", &ExperimentConfig::cg_threshold));
    v.push_back(number("coarsegrain", "n_max", "largest scale", &ExperimentConfig::n_max));
    v.push_back(number("coarsegrain", "samples", "samples used (0: all)", &ExperimentConfig::cg_samples));
    v.push_back(number("coarsegrain", "flatness_samples", "samples for corrector flatness", &ExperimentConfig::flatness_samples));
    v.push_back(number("clt", "R", "test-function scale", &ExperimentConfig::R));
    v.push_back(number("clt", "a_bar", "scalar ā (0: estimate)", &ExperimentConfig::a_bar));
    v.push_back(number("clt", "bl_k", "largest moment order of the Brascamp-Lieb check", &ExperimentConfig::bl_k));
    v.push_back(list("clt", "energy_R", "R grid for the energy convergence (empty: skip)", &ExperimentConfig::energy_R));
    v.push_back(number("clt", "energy_ratio", "L / R on the energy grid", &ExperimentConfig::energy_ratio));
    v.push_back(number("clt", "energy_samples", "samples per energy level", &ExperimentConfig::energy_samples));
    v.push_back(number("oracle", "ks_draws", "draws per KS check", &ExperimentConfig::ks_draws));
    v.push_back(number("oracle", "tree_fields", "random fields for the matrix-tree check", &ExperimentConfig::tree_fields));
    v.push_back(text("input", "snapshots", "snapshot directory from `sample` (empty: sample inline)", &ExperimentConfig::snapshots));
    return v;
  }();
  return f;
}

void require(bool ok, const char* where, const std::string& msg) {
  if (!ok) throw ConfigError(std::string(where) + ": " + msg);
}

}  // namespace

SamplerConfig ExperimentConfig::sampler_config(std::uint64_t chain) const {
  SamplerConfig s;
  s.dim = dim;
  s.delta = delta;
  s.L = L;
  s.seed = seed;
  s.burn_in = burn_in;
  s.thinning = thinning;
  s.n_samples = n_samples;
  s.kind = sampler;
  s.chain = chain;
  return s;
}

SolverOptions ExperimentConfig::solver_options() const {
  SolverOptions o;
  o.kind = solver;
  o.tolerance = tolerance;
  o.max_iterations = max_iterations;
  return o;
}

void ExperimentConfig::validate() const {
  require(command.empty() || command == "sample" || command == "estimate-ahom" || command == "percolation" ||
              command == "clt" || command == "oracle-check",
          "[run] command", "unknown command '" + command + "'");
  require(threads >= 1, "[run] threads", "must be at least 1");
  require(dim >= 1 && dim <= 3, "[model] dim", "must be 1, 2 or 3");
  require(L >= 1, "[model] L", "must be at least 1");
  require(delta >= 0.0 && std::isfinite(delta), "[model] delta", "must be finite and non-negative");
  require(burn_in >= 0, "[sampler] burn_in", "must be non-negative");
  require(thinning >= 1, "[sampler] thinning", "must be at least 1");
  require(n_samples >= 1, "[sampler] n_samples", "must be at least 1");
  require(chains >= 1, "[sampler] chains", "must be at least 1");
  require(tolerance > 0.0 && tolerance < 1.0, "[solver] tolerance", "must lie in (0, 1)");
  require(max_iterations >= 1, "[solver] max_iterations", "must be at least 1");
  require(threshold > 0.0, "[percolation] threshold", "must be positive");
  require(!thresholds.empty(), "[percolation] thresholds", "must not be empty");
  for (double t : thresholds) require(t > 0.0, "[percolation] thresholds", "entries must be positive");
  require(max_path_length >= 1, "[percolation] max_path_length", "must be at least 1");
  require(good_cube_scales >= 1, "[percolation] good_cube_scales", "must be at least 1");
  require(cg_threshold > 0.0, "[coarsegrain] threshold", "must be positive");
  require(n_max >= 1, "[coarsegrain] n_max", "must be at least 1");
  require(cg_samples >= 0, "[coarsegrain] samples", "must be non-negative");
  require(flatness_samples >= 0, "[coarsegrain] flatness_samples", "must be non-negative");
  require(R > 0.0, "[clt] R", "must be positive");
  require(a_bar >= 0.0, "[clt] a_bar", "must be non-negative (0 estimates it)");
  require(bl_k >= 1, "[clt] bl_k", "must be at least 1");
  for (double r : energy_R) require(r > 0.0, "[clt] energy_R", "entries must be positive");
  require(energy_ratio > 1.0, "[clt] energy_ratio", "must exceed 1");
  require(energy_samples >= 1, "[clt] energy_samples", "must be at least 1");
  require(ks_draws >= 100, "[oracle] ks_draws", "must be at least 100");
  require(tree_fields >= 1, "[oracle] tree_fields", "must be at least 1");
  try {
    sampler_config().validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[sampler] ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " at line " + std::to_string(e.line()));
  }
  std::map<std::pair<std::string, std::string>, const Field*> index;
  std::set<std::string> sections;
  for (const auto& f : fields()) {
    index[{f.key.section, f.key.key}] = &f;
    sections.insert(f.key.section);
  }

  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    if (!sections.count(section)) throw ConfigError("[" + section + "]: unknown section");
    for (const auto& [key, value] : body) {
      const auto it = index.find({section, key});
      const std::string where = "[" + section + "] " + key;
      if (it == index.end()) throw ConfigError(where + ": unknown key");
      it->second->set(c, where, value.data());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& c) {
  std::string out, section;
  for (const auto& f : fields()) {
    if (f.key.section != section) {
      if (!section.empty()) out += '\n';
      section = f.key.section;
      out += "[" + section + "]\n";
    }
    out += f.key.key + " = " + f.get(c) + "\n";
  }
  return out;
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

}  // namespace soslab
