#include "soslab/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <thread>

#include "soslab/clt.hpp"
#include "soslab/errors.hpp"
#include "soslab/oracle.hpp"
#include "soslab/percolation.hpp"
#include "soslab/stats.hpp"

namespace soslab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json est(const stats::Estimate& e) { return {{"value", json_number(e.value)}, {"se", json_number(e.se)}}; }

json est_list(const std::vector<stats::Estimate>& v) {
  json a = json::array();
  for (const auto& e : v) a.push_back(est(e));
  return a;
}

std::string numbered(const char* prefix, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%06zu.sosf", prefix, k);
  return buf;
}

struct Output {
  explicit Output(const ExperimentConfig& c) : dir(c.out), prov(provenance(c)) {}

  void put(CommandOutcome& o, const std::string& name, const std::string& bytes) const {
    write_file(dir / name, bytes);
    o.files.push_back(name);
  }
  void config(CommandOutcome& o, const ExperimentConfig& c) const {
    put(o, "config_" + c.command + ".ini", "# config_hash=" + prov.config_hash + " seed=" + std::to_string(prov.seed) + "\n" + to_ini(c));
  }

  fs::path dir;
  Provenance prov;
};

double central_edge_gradient2(const PhiField& phi) {
  const Coord o{};
  const double g = phi(unit_vector(0)) - phi(o);
  return g * g;
}

std::vector<int> int_list(const std::vector<double>& v) {
  std::vector<int> out;
  for (double x : v) out.push_back(static_cast<int>(std::lround(x)));
  return out;
}

std::vector<ChainSample> first(std::vector<ChainSample> s, int n) {
  if (n > 0 && static_cast<std::size_t>(n) < s.size()) s.resize(static_cast<std::size_t>(n));
  return s;
}

}  // namespace

std::string portable_config(const ExperimentConfig& c) {
  ExperimentConfig k = c;
  k.out = ".";
  k.threads = 1;
  return to_ini(k);
}

std::string config_hash(const ExperimentConfig& c) { return git_blob_hash(portable_config(c)); }

Provenance provenance(const ExperimentConfig& c) { return {config_hash(c), c.seed}; }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<ChainSample> acquire_samples(const ExperimentConfig& c) {
  std::vector<ChainSample> out;
  if (!c.snapshots.empty()) {
    const fs::path dir(c.snapshots);
    if (!fs::is_directory(dir)) throw IoError("snapshot directory does not exist: " + dir.string());
    for (std::size_t k = 0;; ++k) {
      const auto p = dir / numbered("phi", k), t = dir / numbered("tau", k);
      if (!fs::exists(p) && !fs::exists(t)) break;
      ChainSample s;
      s.phi = decode_phi_snapshot(read_file(p), p.string());
      s.tau = decode_tau_snapshot(read_file(t), t.string());
      s.sweep = static_cast<std::int64_t>(k);
      out.push_back(std::move(s));
    }
    if (out.empty()) throw IoError("no snapshots in " + dir.string());
    return out;
  }
  std::vector<std::vector<ChainSample>> chains(static_cast<std::size_t>(c.chains));
  parallel_for(chains.size(), c.threads, [&](std::size_t k) { chains[k] = run_chain(c.sampler_config(k)); });
  for (auto& ch : chains)
    for (auto& s : ch) out.push_back(std::move(s));
  return out;
}

int fitting_scale(int dim, std::int64_t L, int n_max) {
  const auto box = LatticeBox::cube(dim, L);
  int best = 0;
  for (int n = 1; n <= n_max; ++n)
    if (box.contains_box(central_cube(dim, n).enlarged())) best = n;
  return best;
}

AhomEstimate estimate_ahom(std::span<const ChainSample> samples, const ExperimentConfig& c, int n) {
  if (n < 1) throw ConfigError("[coarsegrain] n_max: no scale fits in Q_L with its enlargement");
  AhomEstimate a;
  a.n = n;
  std::vector<std::vector<ScaleEntry>> per(samples.size());
  std::vector<char> degenerate(samples.size(), 0);
  const auto opts = c.solver_options();
  parallel_for(samples.size(), c.threads, [&](std::size_t k) {
    try {
      const auto clusters = decompose_clusters(samples[k].tau, c.cg_threshold);
      per[k] = scale_sweep_sample(samples[k].tau, clusters, n, opts);
    } catch (const DegenerateClusterError&) {
      degenerate[k] = 1;
    }
  });
  std::vector<std::vector<ScaleEntry>> ok;
  for (std::size_t k = 0; k < per.size(); ++k) {
    if (degenerate[k])
      ++a.degenerate;
    else
      ok.push_back(std::move(per[k]));
  }
  a.samples = ok.size();
  if (ok.size() < 2) throw StatisticsError("estimate_ahom: fewer than 2 usable samples");
  a.scales = summarize_sweep(ok);
  a.scalar = a.scales.back().scalar.value;
  return a;
}

CommandOutcome cmd_sample(const ExperimentConfig& c) {
  CommandOutcome o;
  const Output out(c);
  fs::create_directories(out.dir / "snapshots");
  const auto samples = acquire_samples(ExperimentConfig([&] {
    auto k = c;
    k.snapshots.clear();
    return k;
  }()));

  CsvWriter csv(out.prov, {"index", "chain", "sweep", "central_grad2", "mean_grad2", "mean_tau", "min_tau", "max_tau"});
  json files = json::array();
  std::vector<std::vector<double>> central(static_cast<std::size_t>(c.chains));
  const std::size_t per_chain = static_cast<std::size_t>(c.n_samples);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const auto pb = encode_snapshot(s.phi), tb = encode_snapshot(s.tau);
    out.put(o, "snapshots/" + numbered("phi", k), pb);
    out.put(o, "snapshots/" + numbered("tau", k), tb);
    files.push_back({{"index", k}, {"phi", git_blob_hash(pb)}, {"tau", git_blob_hash(tb)}});
    double g2 = 0.0, mt = 0.0, lo = INFINITY, hi = -INFINITY;
    const auto edges = enumerate_edges(s.phi.box());
    for (const auto& e : edges) {
      const double g = gradient(s.phi, e);
      g2 += g * g;
      const double t = s.tau(e);
      mt += t;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    const double cg = central_edge_gradient2(s.phi);
    central[k / per_chain].push_back(cg);
    const auto n = static_cast<double>(edges.size());
    csv.row({static_cast<double>(k), static_cast<double>(k / per_chain), static_cast<double>(s.sweep), cg, g2 / n, mt / n,
             lo, hi});
  }
  out.put(o, "sample_summary.csv", csv.str());

  std::vector<double> all;
  json chains = json::array();
  for (std::size_t ch = 0; ch < central.size(); ++ch) {
    all.insert(all.end(), central[ch].begin(), central[ch].end());
    json j{{"chain", ch}, {"samples", central[ch].size()},
           {"sweeps", c.burn_in + static_cast<std::int64_t>(c.thinning) * c.n_samples}};
    j["central_grad2_tau_int"] =
        json_number(central[ch].size() >= 4 ? stats::integrated_autocorrelation_time(central[ch]) : NAN);
    chains.push_back(j);
  }
  json body{{"command", "sample"},
            {"config", portable_config(c)},
            {"burn_in", c.burn_in},
            {"thinning", c.thinning},
            {"chains", chains},
            {"snapshots", files},
            {"central_grad2", est(all.size() >= 2 ? stats::mean_estimate(all) : stats::Estimate{all.front(), 0.0})}};
  out.put(o, "manifest.json", json_report(out.prov, body));
  out.config(o, c);
  o.messages.push_back("wrote " + std::to_string(samples.size()) + " snapshot pairs to " + (out.dir / "snapshots").string());
  return o;
}

CommandOutcome cmd_estimate_ahom(const ExperimentConfig& c) {
  CommandOutcome o;
  const Output out(c);
  const auto samples = first(acquire_samples(c), c.cg_samples);
  const int n = c.n_max;
  if (fitting_scale(c.dim, samples.front().tau.box().hi()[0], n) < n)
    throw ConfigError("[coarsegrain] n_max: the central cube of scale " + std::to_string(n) +
                      " and its enlargement do not fit in Q_L");
  const auto a = estimate_ahom(samples, c, n);

  std::vector<std::string> cols{"scale"};
  const int d = c.dim;
  for (const char* m : {"a", "astar"})
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        cols.push_back(std::string(m) + std::to_string(i + 1) + std::to_string(j + 1));
        cols.push_back(std::string(m) + std::to_string(i + 1) + std::to_string(j + 1) + "_se");
      }
  for (const char* s : {"gap", "gap_se", "scalar", "scalar_se", "min_eigenvalue", "max_quadratic_residual",
                        "ordering_violations"})
    cols.emplace_back(s);
  CsvWriter csv(out.prov, cols);
  json scales = json::array();
  for (const auto& s : a.scales) {
    std::vector<double> row{static_cast<double>(s.scale)};
    for (const auto* m : {&s.a_bar, &s.a_bar_star})
      for (const auto& e : *m) {
        row.push_back(e.value);
        row.push_back(e.se);
      }
    row.insert(row.end(), {s.gap.value, s.gap.se, s.scalar.value, s.scalar.se, s.min_eigenvalue,
                           s.max_quadratic_residual, static_cast<double>(s.ordering_violations)});
    csv.row(row);
    scales.push_back({{"scale", s.scale},
                      {"a_bar", est_list(s.a_bar)},
                      {"a_bar_star", est_list(s.a_bar_star)},
                      {"gap", est(s.gap)},
                      {"scalar", est(s.scalar)},
                      {"min_eigenvalue", json_number(s.min_eigenvalue)},
                      {"max_quadratic_residual", json_number(s.max_quadratic_residual)},
                      {"ordering_violations", s.ordering_violations}});
  }
  out.put(o, "ahom_scales.csv", csv.str());

  CsvWriter flat(out.prov, {"sample", "scale", "flatness"});
  const auto nf = std::min<std::size_t>(static_cast<std::size_t>(c.flatness_samples), samples.size());
  std::vector<std::vector<double>> profiles(nf);
  parallel_for(nf, c.threads, [&](std::size_t k) {
    try {
      const auto clusters = decompose_clusters(samples[k].tau, c.cg_threshold);
      profiles[k] = corrector_flatness(samples[k].tau, clusters, n, {1.0, 0.0, 0.0}, c.solver_options());
    } catch (const DegenerateClusterError&) {
    }
  });
  for (std::size_t k = 0; k < nf; ++k)
    for (std::size_t s = 0; s < profiles[k].size(); ++s)
      flat.row({static_cast<double>(k), static_cast<double>(s + 1), profiles[k][s]});
  out.put(o, "ahom_flatness.csv", flat.str());

  json body{{"command", "estimate-ahom"},  {"threshold", c.cg_threshold}, {"n_max", n},
            {"samples", a.samples},        {"degenerate_samples", a.degenerate},
            {"scales", scales},            {"scalar_a_bar", json_number(a.scalar)}};
  out.put(o, "ahom.json", json_report(out.prov, body));
  out.config(o, c);
  o.messages.push_back("scalar a_bar at scale " + std::to_string(n) + ": " + format_number(a.scalar));
  return o;
}

CommandOutcome cmd_percolation(const ExperimentConfig& c) {
  CommandOutcome o;
  const Output out(c);
  const auto samples = acquire_samples(c);
  std::vector<TauField> tau;
  for (const auto& s : samples) tau.push_back(s.tau);
  const auto& box = tau.front().box();

  const auto paths = straight_path_family(box, c.max_path_length);
  const auto tails = tail_statistics(tau, c.thresholds, paths);
  CsvWriter tcsv(out.prov, {"side", "threshold", "size", "hits", "trials", "probability", "bound_only"});
  for (const auto* side : {&tails.high, &tails.low})
    for (const auto& e : *side)
      tcsv.row({side == &tails.high ? std::string("high") : std::string("low"), format_number(e.threshold),
                std::to_string(e.size), std::to_string(e.hits), std::to_string(e.trials), format_number(e.probability),
                e.bound_only ? "1" : "0"});
  out.put(o, "percolation_tails.csv", tcsv.str());

  // Single-edge exceedance P(|τ| > t) against t.
  std::vector<double> ts, logp;
  json single = json::array();
  for (double t : c.thresholds) {
    std::size_t hits = 0, trials = 0;
    for (const auto& f : tau)
      for (const auto& p : paths)
        if (p.size() == 1) {
          ++trials;
          if (std::abs(f(p.front())) > t) ++hits;
        }
    const auto pr = stats::proportion(hits, trials);
    single.push_back({{"threshold", t}, {"hits", hits}, {"trials", trials}, {"probability", est(pr)}});
    if (hits > 0) {
      ts.push_back(t);
      logp.push_back(std::log(pr.value));
    }
  }
  json single_fit;
  if (ts.size() >= 3) {
    const auto fit = stats::linear_fit(ts, logp);
    single_fit = {{"slope", fit.slope}, {"slope_se", fit.slope_se}, {"r2", fit.r2}, {"points", ts.size()}};
  } else {
    single_fit = {{"points", ts.size()}};
  }

  std::map<int, double> reference;
  for (int p : {1, 2, 4}) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& f : tau)
      for (const auto& e : enumerate_edges(box)) {
        s += std::exp(-p * f(e));
        ++n;
      }
    reference[p] = s / static_cast<double>(n);
  }
  CsvWriter gcsv(out.prov, {"scale", "cubes", "good", "fraction", "fraction_se"});
  json good = json::array();
  bool monotone = true;
  double prev = -1.0, prev_se = 0.0;
  for (int n = 1; n <= c.good_cube_scales; ++n) {
    std::vector<GoodFraction> per(tau.size());
    parallel_for(tau.size(), c.threads, [&](std::size_t k) {
      per[k] = good_cube_fraction(tau[k], decompose_clusters(tau[k], c.threshold), n, reference);
    });
    std::size_t cubes = 0, g = 0;
    std::vector<double> fr;
    for (const auto& f : per) {
      cubes += f.cubes;
      g += f.good;
      if (f.cubes) fr.push_back(static_cast<double>(f.good) / static_cast<double>(f.cubes));
    }
    const auto fe = fr.size() >= 2 ? stats::mean_estimate(fr) : stats::Estimate{fr.empty() ? NAN : fr.front(), 0.0};
    gcsv.row({static_cast<double>(n), static_cast<double>(cubes), static_cast<double>(g), fe.value, fe.se});
    good.push_back({{"scale", n}, {"cubes", cubes}, {"good", g}, {"fraction", est(fe)}});
    if (cubes == 0) break;
    if (prev >= 0.0 && fe.value < prev - 3.0 * std::hypot(fe.se, prev_se)) monotone = false;
    prev = fe.value;
    prev_se = fe.se;
  }
  out.put(o, "good_cubes.csv", gcsv.str());

  // Inverse moments from the τ of the edges in the central half of the box.
  std::vector<double> central;
  const auto inner = LatticeBox::cube(box.dim(), std::max<std::int64_t>(1, box.hi()[0] / 2));
  for (const auto& f : tau)
    for (const auto& e : enumerate_edges(inner)) central.push_back(f(e));
  const auto ks = int_list(c.inverse_moments);
  const auto moments = estimate_inverse_moments(central, ks);
  CsvWriter mcsv(out.prov, {"k", "estimate", "se", "half_estimate", "half_se", "stable", "tail_index", "verdict"});
  json mj = json::array();
  for (const auto& m : moments) {
    mcsv.row({std::to_string(m.k), format_number(m.estimate.value), format_number(m.estimate.se),
              format_number(m.half_estimate.value), format_number(m.half_estimate.se), m.stable ? "1" : "0",
              format_number(m.tail_index), m.verdict});
    mj.push_back({{"k", m.k},
                  {"estimate", est(m.estimate)},
                  {"half_estimate", est(m.half_estimate)},
                  {"stable", m.stable},
                  {"tail_index", json_number(m.tail_index)},
                  {"verdict", m.verdict}});
  }
  out.put(o, "inverse_moments.csv", mcsv.str());

  json fits = json::array();
  for (const auto* side : {&tails.high_fit, &tails.low_fit})
    for (const auto& f : *side)
      fits.push_back({{"side", side == &tails.high_fit ? "high" : "low"},
                      {"threshold", f.threshold},
                      {"alpha", json_number(f.alpha)},
                      {"alpha_se", json_number(f.alpha_se)},
                      {"points", f.points}});
  json body{{"command", "percolation"},
            {"samples", tau.size()},
            {"threshold", c.threshold},
            {"single_edge_bad", json_number(tails.single_edge_bad)},
            {"single_edge_bound", 1.0 / (2.0 * 4.0 * c.dim * std::numbers::e)},
            {"single_edge", single},
            {"single_edge_fit", single_fit},
            {"tail_fits", fits},
            {"good_cubes", good},
            {"good_fraction_non_decreasing", monotone},
            {"inverse_moments", mj}};
  out.put(o, "percolation.json", json_report(out.prov, body));
  out.config(o, c);
  o.messages.push_back("single-edge bad probability at t = " + format_number(c.thresholds.front()) + ": " +
                       format_number(tails.single_edge_bad));
  return o;
}

CommandOutcome cmd_clt(const ExperimentConfig& c) {
  CommandOutcome o;
  const Output out(c);
  const auto samples = acquire_samples(c);
  const auto& box = samples.front().phi.box();
  const auto f = TestVectorField::bump(c.dim, c.R);
  if (c.R + 1.0 >= static_cast<double>(box.hi()[0])) throw ConfigError("[clt] R: the support of f_R must lie inside Q_L");

  json ahom;
  double a_bar = c.a_bar;
  if (a_bar <= 0.0) {
    const int n = fitting_scale(c.dim, box.hi()[0], c.n_max);
    const auto used = first(samples, c.cg_samples);
    const auto a = estimate_ahom(used, c, n);
    a_bar = a.scalar;
    ahom = {{"scale", n},
            {"samples", a.samples},
            {"degenerate_samples", a.degenerate},
            {"scalar", est(a.scales.back().scalar)}};
  }
  const auto r = clt_report(samples, f, a_bar, c.delta, c.bl_k, kModelPrecisionScale, c.solver_options());

  CsvWriter csv(out.prov, {"index", "F_R", "tau_route", "bl_lhs", "bl_rhs"});
  for (std::size_t k = 0; k < samples.size(); ++k)
    csv.row({static_cast<double>(k), r.var_direct.per_sample[k], r.var_tau.per_sample[k], r.brascamp_lieb.samples[k].lhs,
             r.brascamp_lieb.samples[k].rhs});
  out.put(o, "clt_samples.csv", csv.str());

  json bl_moments = json::array();
  for (const auto& m : r.brascamp_lieb.moments)
    bl_moments.push_back({{"k", m.k},
                          {"moment", est(m.moment)},
                          {"bound", json_number(m.bound)},
                          {"C_k", json_number(m.C_k)},
                          {"verdict", m.verdict}});
  json body{{"command", "clt"},
            {"dim", r.dim},
            {"R", r.R},
            {"L", r.L},
            {"delta", r.delta},
            {"n_samples", r.n_samples},
            {"precision_scale", kModelPrecisionScale},
            {"var_direct", est(r.var_direct.variance)},
            {"mean_F", est(r.var_direct.mean)},
            {"var_tau", est(r.var_tau.variance)},
            {"tau_solver_failures", r.var_tau.failures},
            {"a_bar", json_number(r.a_bar)},
            {"var_gff", json_number(r.var_gff)},
            {"route_z", json_number(r.route_z)},
            {"routes_consistent", r.routes_consistent},
            {"m1", est(r.moments.m1)},
            {"m2", est(r.moments.m2)},
            {"m3", est(r.moments.m3)},
            {"even_moments", est_list(r.moments.even_moments)},
            {"wick_ratios", est_list(r.moments.wick_ratios)},
            {"brascamp_lieb",
             {{"violations", r.brascamp_lieb.violations},
              {"min_margin", json_number(r.brascamp_lieb.min_margin)},
              {"dirichlet_energy", json_number(r.brascamp_lieb.dirichlet_energy)},
              {"moments", bl_moments}}}};
  if (!ahom.is_null()) body["a_bar_estimate"] = ahom;

  if (!c.energy_R.empty()) {
    std::vector<EnergyLevel> levels(c.energy_R.size());
    parallel_for(levels.size(), c.threads, [&](std::size_t k) {
      auto sc = c.sampler_config(1000 + k);
      sc.L = std::llround(c.energy_ratio * c.energy_R[k]);
      sc.n_samples = c.energy_samples;
      levels[k].R = c.energy_R[k];
      for (auto& s : run_chain(sc)) levels[k].tau.push_back(std::move(s.tau));
    });
    const auto prof = energy_convergence(levels, TestVectorField::bump(c.dim, 1.0),
                                         a_bar * Eigen::MatrixXd::Identity(c.dim, c.dim), c.solver_options());
    CsvWriter ecsv(out.prov, {"R", "L", "energy", "energy_se", "continuum", "gap", "gap_se", "continuum_box", "box_gap", "box_gap_se", "failures"});
    json pts = json::array();
    for (const auto& p : prof.points) {
      ecsv.row({p.R, static_cast<double>(p.L), p.energy.value, p.energy.se, p.continuum, p.gap.value, p.gap.se, p.continuum_box,
                p.box_gap.value, p.box_gap.se, static_cast<double>(p.failures)});
      pts.push_back({{"R", p.R}, {"L", p.L}, {"energy", est(p.energy)}, {"gap", est(p.gap)},
                     {"continuum_box", json_number(p.continuum_box)}, {"box_gap", est(p.box_gap)},
                     {"failures", p.failures}});
    }
    out.put(o, "energy.csv", ecsv.str());
    body["energy_convergence"] = {{"points", pts},
                                  {"continuum", json_number(prof.continuum_fine)},
                                  {"continuum_coarse", json_number(prof.continuum_coarse)},
                                  {"resolution_gap", json_number(prof.resolution_gap)},
                                  {"last_two_non_increasing", prof.last_two_non_increasing}};
  }
  out.put(o, "clt.json", json_report(out.prov, body));
  out.config(o, c);
  o.messages.push_back("var_direct " + format_number(r.var_direct.variance.value) + " var_tau " +
                       format_number(r.var_tau.variance.value) + " var_gff " + format_number(r.var_gff));
  return o;
}

CommandOutcome cmd_oracle_check(const ExperimentConfig& c) {
  CommandOutcome o;
  const Output out(c);
  json checks = json::array();
  std::vector<std::string> failed;
  auto record = [&](const std::string& name, bool pass, json detail) {
    detail["name"] = name;
    detail["pass"] = pass;
    checks.push_back(detail);
    if (!pass) failed.push_back(name);
  };

  for (double z : {0.1, 1.0, 10.0}) {
    const auto q = oracle::quadrature_magic_identity(z);
    const double exact = std::exp(-2.0 * std::sqrt(z));
    const double err = std::abs(q.value - exact);
    record("magic_identity z=" + format_number(z), err <= 1e-10,
           {{"value", q.value}, {"exact", exact}, {"abs_error", err}, {"tolerance", 1e-10}});
  }

  {
    const auto box = LatticeBox::cube(2, 2);
    double worst = 0.0;
    for (int k = 0; k < c.tree_fields; ++k) {
      RngStream rng(c.seed, StreamId{StreamKind::analysis, 1, 0, static_cast<std::uint64_t>(k)});
      TauField tau(box);
      for (const auto& e : enumerate_edges(box)) tau(e) = 2.0 * rng.uniform() - 1.0;
      const double main = log_det(ConductanceOperator(box, tau, BoundaryMode::dirichlet, c.solver_options()));
      const double trees = static_cast<double>(std::log(oracle::enumerate_wired_spanning_trees(box, tau)));
      worst = std::max(worst, std::abs(main - trees) / std::abs(trees));
    }
    record("matrix_tree d=2 L=2", worst <= 1e-9,
           {{"fields", c.tree_fields}, {"max_relative_error", worst}, {"tolerance", 1e-9}});
  }

  {
    const auto box = LatticeBox::cube(2, 4);
    RngStream rng(c.seed, StreamId{StreamKind::analysis, 2, 0, 0});
    TauField tau(box);
    for (const auto& e : enumerate_edges(box)) tau(e) = 3.0 * (2.0 * rng.uniform() - 1.0);
    VertexFunction b(box);
    const auto interior = box.interior_sites();
    auto dense = oracle::dirichlet_matrix(box, [&](const Edge& e) { return tau.a(e); });
    dense.b.resize(dense.n);
    for (std::size_t k = 0; k < interior.size(); ++k) dense.b[k] = b(interior[k]) = rng.normal();
    const auto x = oracle::dense_solve(dense);
    const ConductanceOperator op(box, tau, BoundaryMode::dirichlet, c.solver_options());
    const auto u = op.solve(nullptr, &b, nullptr).solution;
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < interior.size(); ++k) {
      err = std::max(err, std::abs(u(interior[k]) - x[k]));
      scale = std::max(scale, std::abs(x[k]));
    }
    record("dense_solve d=2 L=4", err <= 1e-9 * scale, {{"max_abs_error", err}, {"scale", scale}, {"tolerance", 1e-9}});
  }

  for (double z : {0.1, 1.0, 10.0}) {
    std::vector<double> draws;
    for (int k = 0; k < c.ks_draws; ++k) {
      RngStream rng(c.seed, StreamId{StreamKind::analysis, 3, static_cast<std::uint64_t>(z * 1000), static_cast<std::uint64_t>(k)});
      draws.push_back(sample_tau_given_gradient(std::sqrt(z), 0.0, rng));
    }
    std::sort(draws.begin(), draws.end());
    const double d = stats::ks_statistic(oracle::tau_cdf_sorted(z, draws));
    const double p = stats::kolmogorov_pvalue(d, draws.size());
    record("tau_sampler_ks z=" + format_number(z), p >= 0.01, {{"ks", d}, {"p_value", p}, {"draws", draws.size()}});
  }

  {
    const std::vector<double> nb{-1.0, 0.0, 0.5, 1.5};
    const auto cdf = oracle::heatbath_conditional(nb, kModelCoupling);
    std::vector<double> draws;
    for (int k = 0; k < c.ks_draws; ++k) {
      RngStream rng(c.seed, StreamId{StreamKind::analysis, 4, 0, static_cast<std::uint64_t>(k)});
      draws.push_back(heatbath_phi_site(nb, kModelCoupling, rng));
    }
    std::sort(draws.begin(), draws.end());
    std::vector<double> F;
    for (double x : draws) F.push_back(cdf.cdf(x));
    const double d = stats::ks_statistic(F);
    const double p = stats::kolmogorov_pvalue(d, draws.size());
    record("heatbath_ks", p >= 0.01, {{"ks", d}, {"p_value", p}, {"draws", draws.size()}});
  }

  if (!c.snapshots.empty()) {
    const fs::path dir(c.snapshots);
    if (!fs::is_directory(dir)) throw IoError("snapshot directory does not exist: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".sosf") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
      const auto name = p.filename().string();
      try {
        if (name.rfind("tau_", 0) == 0)
          decode_tau_snapshot(read_file(p), name);
        else
          decode_phi_snapshot(read_file(p), name);
        record("snapshot " + name, true, json::object());
      } catch (const IoError& e) {
        record("snapshot " + name, false, {{"error", e.what()}});
      }
    }
  }

  json body{{"command", "oracle-check"}, {"checks", checks}, {"passed", failed.empty()}, {"failed", failed}};
  out.put(o, "oracle_ledger.json", json_report(out.prov, body));
  out.config(o, c);
  if (failed.empty()) {
    o.messages.push_back("all " + std::to_string(checks.size()) + " oracle checks passed");
  } else {
    o.exit_code = kExitNumerical;
    for (const auto& f : failed) o.messages.push_back("FAILED: " + f);
  }
  return o;
}

CommandOutcome run_command(const ExperimentConfig& c) {
  c.validate();
  const fs::path dir(c.out);
  if (!fs::is_directory(dir)) throw IoError("output directory does not exist: " + dir.string());
  if (c.command == "sample") return cmd_sample(c);
  if (c.command == "estimate-ahom") return cmd_estimate_ahom(c);
  if (c.command == "percolation") return cmd_percolation(c);
  if (c.command == "clt") return cmd_clt(c);
  if (c.command == "oracle-check") return cmd_oracle_check(c);
  throw ConfigError("[run] command: no command given");
}

}  // namespace soslab
