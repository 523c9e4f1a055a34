// Acceptance runs. `acceptance N` evaluates criterion N and prints one
// PASS/FAIL line; without arguments every criterion runs in order.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "soslab/clt.hpp"
#include "soslab/coarsegrain.hpp"
#include "soslab/elliptic.hpp"
#include "soslab/errors.hpp"
#include "soslab/io.hpp"
#include "soslab/oracle.hpp"
#include "soslab/percolation.hpp"
#include "soslab/sampler.hpp"
#include "soslab/stats.hpp"

using namespace soslab;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20261016;

// 1
constexpr double kMagicTol = 1e-10;
constexpr double kMagicSeconds = 1.0;
// 2
constexpr int kKsDraws = 100000;
constexpr double kKsLevel = 0.01;
constexpr double kTauSamplerSeconds = 30.0;
// 3
constexpr int kTreeFields = 20;
constexpr double kTreeTol = 1e-9;
constexpr double kTreeSeconds = 60.0;
// 4
constexpr int kCrossSamples = 10000;
// 5, 6
constexpr std::int64_t kInequalityL = 27;
constexpr int kInequalitySamples = 1000;
constexpr int kQuadraticSamples = 100;
constexpr double kQuadraticTol = 1e-8;
constexpr double kClusterThreshold = 5.0;
// 7, 8
constexpr int kTailSamples = 1000;
constexpr double kTailR2 = 0.95;
constexpr std::int64_t kGoodCubeL = 162;
constexpr int kGoodCubeSamples = 20;
constexpr int kMomentSamples = 2000;
// 9
constexpr std::int64_t kAhomL = 81;
constexpr int kAhomSamples = 200;
// 10, 11
constexpr int kAbarSamples = 100;
constexpr std::int64_t kCltL = 64;
constexpr double kCltR = 8.0;
constexpr int kCltSamples = 1000;
constexpr double kGffRelTol = 0.15;
constexpr double kCltSeconds = 1800.0;
constexpr int kEnergySamples = 100;
constexpr double kEnergyRatio = 8.0;
// 12
constexpr int kPoincareInputs = 100;
constexpr std::int64_t kPoincareL = 122;
constexpr double kPoincareStability = 2.0;

constexpr double kZ = 3.0;  // CI half-width in standard errors

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::vector<ChainSample> chain(std::int64_t L, int n, int thinning, int burn_in, std::uint64_t index,
                               SamplerKind kind = SamplerKind::joint_alternating) {
  SamplerConfig c;
  c.dim = 2;
  c.L = L;
  c.seed = kSeed;
  c.burn_in = burn_in;
  c.thinning = thinning;
  c.n_samples = n;
  c.kind = kind;
  c.chain = index;
  return run_chain(c);
}

std::vector<TauField> taus(const std::vector<ChainSample>& s) {
  std::vector<TauField> out;
  for (const auto& x : s) out.push_back(x.tau);
  return out;
}

LatticeBox centred_half_open(int n) {
  const std::int64_t c = -(static_cast<std::int64_t>(std::pow(3, n)) - 1) / 2;
  return LatticeBox::half_open_triadic(2, n, Coord{c, c});
}

// Scale sweep up to n on the central cube of an L chain; degenerate samples are skipped and counted.
std::vector<ScaleSummary> ahom_sweep(std::int64_t L, int samples, int n, std::uint64_t index, std::size_t* degenerate) {
  const auto s = chain(L, samples, 2, 50, index);
  std::vector<std::vector<ScaleEntry>> per;
  for (const auto& x : s) {
    try {
      per.push_back(scale_sweep_sample(x.tau, decompose_clusters(x.tau, kClusterThreshold), n));
    } catch (const DegenerateClusterError&) {
      ++*degenerate;
    }
  }
  return summarize_sweep(per);
}

double estimated_a_bar(std::string& note) {
  std::size_t degenerate = 0;
  const auto sweep = ahom_sweep(kAhomL, kAbarSamples, 3, 900, &degenerate);
  const auto& s = sweep.back().scalar;
  note = fmt("a_bar(box_3, L=%lld) = %.4f +- %.4f", static_cast<long long>(kAhomL), s.value, s.se);
  return s.value;
}

Verdict magic_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double z : {0.1, 1.0, 10.0})
    worst = std::max(worst, std::abs(oracle::quadrature_magic_identity(z).value - std::exp(-2.0 * std::sqrt(z))));
  const double t = seconds_since(t0);
  return {worst <= kMagicTol && t < kMagicSeconds, fmt("max |error| %.2e (tol %.0e), %.3f s", worst, kMagicTol, t)};
}

Verdict tau_sampler() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string d;
  std::vector<double> at_one;
  const double zs[] = {0.1, 1.0, 10.0};
  for (std::uint64_t k = 0; k < 3; ++k) {
    const double z = zs[k];
    std::vector<double> x;
    x.reserve(kKsDraws);
    RngStream rng(kSeed, StreamId{StreamKind::analysis, 2, k, 0});
    for (int i = 0; i < kKsDraws; ++i) x.push_back(sample_tau_given_gradient(std::sqrt(z), 0.0, rng));
    std::sort(x.begin(), x.end());
    const double D = stats::ks_statistic(oracle::tau_cdf_sorted(z, x));
    const double p = stats::kolmogorov_pvalue(D, x.size());
    pass = pass && p >= kKsLevel;
    d += fmt("KS p(z=%g) = %.3f; ", z, p);
    if (z == 1.0) at_one = x;
  }
  const auto med = stats::quantile(at_one, 0.5, kZ);
  const bool median_ok = med.lo <= 0.0 && 0.0 <= med.hi;
  const double t = seconds_since(t0);
  d += fmt("median(z=1) = %.4f, CI [%.4f, %.4f] %s 0; %.1f s", med.value, med.lo, med.hi,
           median_ok ? "contains" : "excludes", t);
  return {pass && median_ok && t < kTauSamplerSeconds, d};
}

Verdict matrix_tree() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto box = LatticeBox::cube(2, 2);
  double worst = 0.0;
  for (int k = 0; k < kTreeFields; ++k) {
    RngStream rng(kSeed, StreamId{StreamKind::analysis, 3, 0, static_cast<std::uint64_t>(k)});
    TauField tau(box);
    for (const auto& e : enumerate_edges(box)) tau(e) = 6.0 * rng.uniform() - 3.0;
    const double main = log_det(ConductanceOperator(box, tau, BoundaryMode::dirichlet));
    const double trees = static_cast<double>(std::log(oracle::enumerate_wired_spanning_trees(box, tau)));
    worst = std::max(worst, std::abs(main - trees) / std::abs(trees));
  }
  const double t = seconds_since(t0);
  return {worst <= kTreeTol && t < kTreeSeconds,
          fmt("%d fields, max relative error %.2e (tol %.0e), %.1f s", kTreeFields, worst, kTreeTol, t)};
}

Verdict sampler_cross_validation() {
  auto central = [](const std::vector<ChainSample>& s) {
    std::vector<double> g2;
    for (const auto& x : s) {
      const double g = x.phi(unit_vector(0)) - x.phi(Coord{});
      g2.push_back(g * g);
    }
    return g2;
  };
  const auto h = central(chain(8, kCrossSamples, 10, 1000, 40, SamplerKind::phi_heatbath));
  const auto j = central(chain(8, kCrossSamples, 10, 1000, 41));
  const auto eh = stats::batch_mean_estimate(h), ej = stats::batch_mean_estimate(j);
  const double z = std::abs(eh.value - ej.value) / std::hypot(eh.se, ej.se);
  return {z <= kZ, fmt("<(grad phi)^2> heat-bath %.5f +- %.5f, joint %.5f +- %.5f, |z| = %.2f (tau_int %.2f / %.2f)",
                       eh.value, eh.se, ej.value, ej.se, z, stats::integrated_autocorrelation_time(h),
                       stats::integrated_autocorrelation_time(j))};
}

Verdict per_sample_inequalities() {
  const auto s = chain(kInequalityL, kInequalitySamples, 2, 200, 50);
  const auto& box = s.front().tau.box();
  const auto bl = brascamp_lieb_check(taus(s), dipole(box, Coord{}, 0));

  const auto parent = centred_half_open(2);
  std::vector<LatticeBox> kids;
  for (std::int64_t i = 0; i < 3; ++i)
    for (std::int64_t j = 0; j < 3; ++j)
      kids.push_back(LatticeBox::half_open_triadic(2, 1, Coord{parent.lo()[0] + 3 * i, parent.lo()[1] + 3 * j}));
  const std::vector<Vec> tv{{1, 0, 0}, {0, 1, 0}, {0.6, -0.8, 0}};
  std::size_t lower = 0, spatial = 0, subadd = 0, fenchel = 0, degenerate = 0, interface = 0;
  double worst_subadd = -INFINITY;
  for (const auto& x : s) {
    try {
      const auto r = check_inequalities(x.tau, decompose_clusters(x.tau, kClusterThreshold), parent, kids, tv);
      lower += r.energy_lower_bound > r.slack;
      spatial += r.spatial_flux > r.slack || r.spatial_gradient > r.slack;
      subadd += r.nu_subadditivity > r.slack || r.nu_star_superadditivity > r.slack;
      fenchel += r.fenchel > r.slack || r.fenchel_identity > r.slack;
      interface += r.interface_edges;
      worst_subadd = std::max(worst_subadd, r.nu_subadditivity);
    } catch (const DegenerateClusterError&) {
      ++degenerate;
    }
  }
  const bool pass = bl.violations == 0 && lower == 0 && spatial == 0 && subadd == 0 && fenchel == 0 && degenerate == 0;
  return {pass, fmt("%zu samples L=%lld: (a) BL %zu (min margin %.3e) (b) lower bound %zu (c) spatial %zu "
                    "(d) subadditivity %zu (max residual %.2e, |E'| total %zu) (e) Fenchel %zu; degenerate %zu",
                    s.size(), static_cast<long long>(kInequalityL), bl.violations, bl.min_margin, lower, spatial,
                    subadd, worst_subadd, interface, fenchel, degenerate)};
}

Verdict quadraticity() {
  const auto s = chain(kInequalityL, kQuadraticSamples, 2, 200, 60);
  const auto region = centred_half_open(2);
  double nu = 0.0, nus = 0.0;
  std::size_t degenerate = 0;
  for (const auto& x : s) {
    try {
      const auto clusters = decompose_clusters(x.tau, kClusterThreshold);
      const AffineHats hats(clusters);
      const CubeProblem problem(x.tau, hats, region);
      nu = std::max(nu, check_nu_quadratic(problem).residual);
      nus = std::max(nus, check_nu_star_quadratic(problem).residual);
    } catch (const DegenerateClusterError&) {
      ++degenerate;
    }
  }
  return {nu <= kQuadraticTol && nus <= kQuadraticTol && degenerate == 0,
          fmt("%zu samples on box_2: max polarization residual nu %.2e, nu* %.2e (tol %.0e); degenerate %zu",
              s.size(), nu, nus, kQuadraticTol, degenerate)};
}

Verdict percolation_tails() {
  const std::vector<double> ts{3, 4, 5, 6, 7};
  const auto s = taus(chain(kInequalityL, kTailSamples, 2, 200, 70));
  const auto paths = straight_path_family(s.front().box(), 2);

  // Per-batch single and pair exceedance rates (τ_e ≥ t on every edge).
  constexpr std::size_t kBatches = 20;
  const std::size_t per = s.size() / kBatches;
  std::vector<double> logp;
  std::string pairs;
  bool pairs_ok = true;
  for (double t : ts) {
    std::vector<double> diff;
    double h1 = 0, n1 = 0, h2 = 0, n2 = 0;
    for (std::size_t b = 0; b < kBatches; ++b) {
      double b1 = 0, m1 = 0, b2 = 0, m2 = 0;
      for (std::size_t k = b * per; k < (b + 1) * per; ++k)
        for (const auto& p : paths) {
          bool all = true;
          for (const auto& e : p) all = all && s[k](e) >= t;
          (p.size() == 1 ? b1 : b2) += all;
          (p.size() == 1 ? m1 : m2) += 1;
        }
      diff.push_back(b2 / m2 - (b1 / m1) * (b1 / m1));
      h1 += b1, n1 += m1, h2 += b2, n2 += m2;
    }
    const auto d = stats::mean_estimate(diff);
    const double p1 = h1 / n1, p2 = h2 / n2;
    const bool ok = std::abs(d.value) <= kZ * d.se;
    pairs_ok = pairs_ok && ok;
    pairs += fmt(" t=%g P2/P1^2=%.3f(z=%.1f)", t, p2 / (p1 * p1), d.value / d.se);
    logp.push_back(std::log(p1));
  }
  const auto fit = stats::linear_fit(ts, logp);
  const bool single_ok = fit.r2 >= kTailR2;

  const auto g = taus(chain(kGoodCubeL, kGoodCubeSamples, 2, 50, 71));
  std::map<int, double> reference;
  for (int p : {1, 2, 4}) {
    double sum = 0.0, n = 0.0;
    for (const auto& f : g)
      for (const auto& e : enumerate_edges(f.box())) sum += std::exp(-p * f(e)), n += 1.0;
    reference[p] = sum / n;
  }
  const double t_good = ts.back();
  std::vector<stats::Estimate> frac;
  std::string good;
  for (int n = 1; n <= 4; ++n) {
    std::vector<double> per_sample;
    for (const auto& f : g) {
      const auto r = good_cube_fraction(f, decompose_clusters(f, t_good), n, reference);
      per_sample.push_back(static_cast<double>(r.good) / static_cast<double>(r.cubes));
    }
    frac.push_back(stats::mean_estimate(per_sample));
    good += fmt(" n=%d %.4f+-%.4f", n, frac.back().value, frac.back().se);
  }
  bool monotone = true;
  for (std::size_t n = 1; n < frac.size(); ++n)
    monotone = monotone && frac[n].value >= frac[n - 1].value - kZ * std::hypot(frac[n].se, frac[n - 1].se);

  return {single_ok && pairs_ok && monotone,
          fmt("single-edge log P vs t: slope %.3f, R^2 %.4f %s; pairs%s %s; good cubes (t=%g, L=%lld)%s %s", fit.slope,
              fit.r2, single_ok ? "ok" : "FAIL", pairs.c_str(), pairs_ok ? "ok" : "FAIL", t_good,
              static_cast<long long>(kGoodCubeL), good.c_str(), monotone ? "non-decreasing" : "DECREASING")};
}

Verdict inverse_moments() {
  const auto s = chain(kInequalityL, kMomentSamples, 2, 200, 80);
  const auto inner = LatticeBox::cube(2, kInequalityL / 2);
  std::vector<double> tau;
  for (const auto& x : s)
    for (const auto& e : enumerate_edges(inner)) tau.push_back(x.tau(e));
  const std::vector<int> ks{1, 2, 4, -1};
  const auto m = estimate_inverse_moments(tau, ks);
  bool pass = true;
  std::string d;
  for (const auto& r : m) {
    if (r.k > 0) pass = pass && r.stable;
    if (r.k < 0) pass = pass && r.verdict == "divergence suspected";
    d += fmt(" k=%d %.4g+-%.2g (half %.4g) %s hill %.2f %s;", r.k, r.estimate.value, r.estimate.se,
             r.half_estimate.value, r.stable ? "stable" : "unstable", r.tail_index, r.verdict.c_str());
  }
  return {pass, d};
}

Verdict homogenized_matrix() {
  std::size_t degenerate = 0;
  const auto sweep = ahom_sweep(kAhomL, kAhomSamples, 3, 90, &degenerate);
  bool decreasing = true, pd = true, offdiag = true;
  std::size_t violations = 0;
  std::string d;
  for (std::size_t n = 0; n < sweep.size(); ++n) {
    const auto& q = sweep[n];
    if (n > 0) decreasing = decreasing && q.gap.value < sweep[n - 1].gap.value;
    pd = pd && q.min_eigenvalue > 0.0;
    for (const auto* m : {&q.a_bar, &q.a_bar_star})
      for (std::size_t k : {1u, 2u}) offdiag = offdiag && std::abs((*m)[k].value) <= kZ * (*m)[k].se;
    violations += q.ordering_violations;
    d += fmt(" n=%d gap %.4f+-%.4f a12 %.4f+-%.4f a*12 %.4f+-%.4f min eig %.3f;", q.scale, q.gap.value, q.gap.se,
             q.a_bar[1].value, q.a_bar[1].se, q.a_bar_star[1].value, q.a_bar_star[1].se, q.min_eigenvalue);
  }
  return {decreasing && pd && offdiag && violations == 0 && degenerate == 0,
          fmt("%d samples L=%lld:%s ordering violations %zu; degenerate %zu", kAhomSamples,
              static_cast<long long>(kAhomL), d.c_str(), violations, degenerate)};
}

Verdict clt_routes() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string note;
  const double a_bar = estimated_a_bar(note);
  const auto s = chain(kCltL, kCltSamples, 2, 200, 100);
  const auto r = clt_report(s, TestVectorField::bump(2, kCltR), a_bar, 0.0, 2, kModelPrecisionScale);
  const double rel = std::abs(r.var_gff - r.var_tau.variance.value) / r.var_tau.variance.value;
  const auto& w = r.moments.wick_ratios.front();
  const bool wick = std::abs(w.value - 1.0) <= kZ * w.se;
  const double t = seconds_since(t0);
  return {r.routes_consistent && r.route_z <= kZ && rel <= kGffRelTol && wick && t <= kCltSeconds,
          fmt("var_direct %.5f+-%.5f var_tau %.5f+-%.5f (z %.2f); var_gff %.5f with %s, rel diff %.3f (tol %.2f); "
              "m4/(3 m2^2) %.3f+-%.3f; tau failures %zu; %.0f s",
              r.var_direct.variance.value, r.var_direct.variance.se, r.var_tau.variance.value,
              r.var_tau.variance.se, r.route_z, r.var_gff, note.c_str(), rel, kGffRelTol, w.value, w.se,
              r.var_tau.failures, t)};
}

Verdict energy_convergence_profile() {
  std::string note;
  const double a_bar = estimated_a_bar(note);
  std::vector<EnergyLevel> levels;
  std::uint64_t index = 110;
  for (double R : {4.0, 8.0, 16.0}) {
    EnergyLevel l;
    l.R = R;
    l.tau = taus(chain(std::llround(kEnergyRatio * R), kEnergySamples, 2, 100, index++));
    levels.push_back(std::move(l));
  }
  const auto p = energy_convergence(levels, TestVectorField::bump(2, 1.0), a_bar * Eigen::MatrixXd::Identity(2, 2));
  std::string d;
  for (const auto& q : p.points)
    d += fmt(" R=%g gap %.5f+-%.5f;", q.R, q.gap.value, q.gap.se);
  return {p.last_two_non_increasing,
          fmt("continuum %.6f (resolution gap %.1e) with %s;%s", p.continuum_fine, p.resolution_gap, note.c_str(),
              d.c_str())};
}

// Random low modes at the cube scale, an optional constant and white noise.
VertexFunction random_input(const LatticeBox& box, double side, std::uint64_t k) {
  RngStream rng(kSeed, StreamId{StreamKind::analysis, 12, 0, k});
  VertexFunction u(box);
  const int modes = 1 + static_cast<int>(rng.below(4));
  std::vector<std::array<double, 4>> m;
  for (int i = 0; i < modes; ++i)
    m.push_back({rng.normal(), 2.0 * M_PI * (1.0 + rng.below(3)) / side * rng.normal(),
                 2.0 * M_PI * (1.0 + rng.below(3)) / side * rng.normal(), 2.0 * M_PI * rng.uniform()});
  const double offset = k % 3 == 0 ? rng.normal() : 0.0;
  // Noise scales with 1/side so its gradient energy keeps the same weight
  // against the smooth modes at every scale.
  const double noise = (k % 4 == 1 ? 1.0 : 0.05 * rng.uniform()) * 9.0 / side;
  for (const auto& x : box.sites()) {
    double v = offset + noise * rng.normal();
    for (const auto& c : m) v += c[0] * std::sin(c[1] * x[0] + c[2] * x[1] + c[3]);
    u(x) = v;
  }
  return u;
}

Verdict poincare() {
  const auto s = taus(chain(kPoincareL, kPoincareInputs, 2, 50, 120));
  std::string d;
  std::vector<double> mp_max, ls_max;
  for (int m = 2; m <= 4; ++m) {
    const auto cube = centred_half_open(m);
    double mp = 0.0, ls = 0.0;
    for (int k = 0; k < kPoincareInputs; ++k) {
      const auto u = random_input(s[static_cast<std::size_t>(k)].box(), std::pow(3.0, m), static_cast<std::uint64_t>(100 * m + k));
      mp = std::max(mp, multiscale_poincare_check(u, cube).ratio);
      ls = std::max(ls, large_scale_poincare_check(s[static_cast<std::size_t>(k)], u, cube).ratio);
    }
    mp_max.push_back(mp);
    ls_max.push_back(ls);
    d += fmt(" m=%d max ratio MP %.4f LS %.4f;", m, mp, ls);
  }
  // One constant for all scales: the per-scale supremum may fall but must not
  // grow by more than kPoincareStability from one scale to the next.
  auto stable = [](const std::vector<double>& v) {
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) ok = ok && std::isfinite(v[i]) && v[i] > 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) ok = ok && v[i] <= kPoincareStability * v[i - 1];
    return ok;
  };
  auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
  };
  const double c_mp = *std::max_element(mp_max.begin(), mp_max.end());
  const double c_ls = *std::max_element(ls_max.begin(), ls_max.end());
  return {stable(mp_max) && stable(ls_max),
          fmt("%d inputs per scale;%s constants C_MP = %.4f, C_LS = %.4f; max/min over scales MP %.2f, LS %.2f "
              "(growth per scale <= %.1f required)",
              kPoincareInputs, d.c_str(), c_mp, c_ls, spread(mp_max), spread(ls_max), kPoincareStability)};
}

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

Verdict determinism() {
  const auto dir = fs::temp_directory_path() / "sos_lab_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir / "run");
  write_file(dir / "exp.ini",
             "[model]\ndim = 2\nL = 9\n[sampler]\nburn_in = 50\nthinning = 2\nn_samples = 60\nchains = 2\n"
             "[percolation]\ngood_cube_scales = 1\n[coarsegrain]\nn_max = 1\n"
             "[clt]\nR = 3\nenergy_R = 1, 2\nenergy_samples = 100\n[oracle]\nks_draws = 5000\ntree_fields = 5\n");
  std::size_t files = 0, differ = 0;
  std::string failed;
  for (const char* cmd : {"sample", "estimate-ahom", "percolation", "clt", "oracle-check"}) {
    const auto line = std::string(SOS_LAB_BINARY) + " " + cmd + " --config " + (dir / "exp.ini").string() +
                      " --seed 7 --threads 2 --out " + (dir / "run").string() + " > " + (dir / "log.txt").string() +
                      " 2>&1";
    std::map<std::string, std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      if (std::system(line.c_str()) != 0) {
        failed += fmt(" %s exited non-zero;", cmd);
        break;
      }
      auto now = snapshot_tree(dir / "run");
      if (rep == 0) {
        first = std::move(now);
        continue;
      }
      for (const auto& [name, bytes] : now) {
        ++files;
        const auto it = first.find(name);
        if (it == first.end() || it->second != bytes) {
          ++differ;
          failed += " " + std::string(cmd) + ":" + name;
        }
      }
    }
  }
  return {failed.empty(), fmt("%zu files compared across reruns of all five commands, %zu differ%s", files, differ,
                              failed.c_str())};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c{
      {1, "integral identity", magic_identity},
      {2, "exact tau sampler", tau_sampler},
      {3, "matrix-tree", matrix_tree},
      {4, "sampler cross-validation", sampler_cross_validation},
      {5, "per-sample inequalities", per_sample_inequalities},
      {6, "quadraticity", quadraticity},
      {7, "percolation tails", percolation_tails},
      {8, "inverse moments", inverse_moments},
      {9, "homogenized matrix", homogenized_matrix},
      {10, "CLT routes", clt_routes},
      {11, "energy convergence", energy_convergence_profile},
      {12, "Poincare inequalities", poincare},
      {13, "determinism", determinism},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  bool all_pass = true;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d %-26s %s  %s\n", c.id, c.name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && v.pass;
  }
  return all_pass ? 0 : 1;
}
