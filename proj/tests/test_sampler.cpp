#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "soslab/errors.hpp"
#include "soslab/oracle.hpp"
#include "soslab/sampler.hpp"
#include "soslab/stats.hpp"
#include "support.hpp"

using namespace soslab;

namespace {

std::vector<double> draw_heatbath(std::vector<double> nb, double beta, int n, std::uint64_t seed) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    out.push_back(heatbath_phi_site(nb, beta, rng));
  }
  return out;
}

std::vector<double> draw_tau(double z, int n, std::uint64_t seed) {
  std::vector<double> out;
  RngStream rng(seed, 0);
  for (int i = 0; i < n; ++i) out.push_back(sample_tau_given_gradient(std::sqrt(z), 0.0, rng));
  return out;
}

double ks_pvalue_heatbath(std::vector<double> x, const oracle::PiecewiseExponential& law) {
  std::sort(x.begin(), x.end());
  std::vector<double> cdf;
  for (double v : x) cdf.push_back(law.cdf(v));
  return stats::kolmogorov_pvalue(stats::ks_statistic(cdf), x.size());
}

double ks_pvalue_tau(std::vector<double> x, double z) {
  std::sort(x.begin(), x.end());
  return stats::kolmogorov_pvalue(stats::ks_statistic(oracle::tau_cdf_sorted(z, x)), x.size());
}

// Normalised target density of s = τ + ½ log z.
double target_s(double s, double z) {
  return std::pow(z, 0.25) * std::exp(-2.0 * std::sqrt(z) * (std::cosh(s) - 1.0) - 0.5 * s) / std::sqrt(std::numbers::pi);
}

}  // namespace

TEST_CASE("heat-bath conditional with one neighbour is Laplace(c, 1)") {
  const auto x = draw_heatbath({1.7}, 1.0, 100000, 1);
  const auto med = stats::quantile(x, 0.5);
  CHECK(std::abs(med.value - 1.7) <= 3.0 * med.se);
  CHECK(ks_pvalue_heatbath(x, oracle::heatbath_conditional({1.7}, 1.0)) > 0.01);
}

TEST_CASE("heat-bath conditional with two equal neighbours has variance 1/2") {
  const auto x = draw_heatbath({-0.4, -0.4}, 1.0, 100000, 2);
  const auto v = stats::variance_estimate(x);
  CHECK(std::abs(v.value - 0.5) <= 3.0 * v.se);
}

TEST_CASE("heat-bath conditional with neighbours {0,1,2,3} matches the piecewise oracle") {
  const auto x = draw_heatbath({0, 1, 2, 3}, 1.0, 100000, 3);
  CHECK(ks_pvalue_heatbath(x, oracle::heatbath_conditional({0, 1, 2, 3}, 1.0)) > 0.01);
}

TEST_CASE("heat-bath conditional on random neighbour sets") {
  RngStream rng(4, 99);
  for (int trial = 0; trial < 8; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(6));
    std::vector<double> nb;
    for (int j = 0; j < m; ++j) nb.push_back(2.0 * rng.normal());
    if (trial == 7) nb = {0.5, 0.5, 0.5, 2.0};
    const double beta = trial % 2 ? 2.0 : 1.0;
    const auto law = oracle::heatbath_conditional(nb, beta);
    CHECK(std::abs(law.cdf_at_infinity() - 1.0) <= 1e-12);
    CHECK(ks_pvalue_heatbath(draw_heatbath(nb, beta, 20000, 10 + static_cast<std::uint64_t>(trial)), law) > 0.001);
  }
}

TEST_CASE("the corrected substitution maps the Gaussian onto the symmetrised target") {
  for (double z : {0.1, 1.0, 10.0}) {
    double worst_corrected = 0.0, worst_printed = 0.0;
    const double q = std::pow(z, 0.25);
    for (double s = -6.0; s <= 6.0; s += 0.05) {
      const double sym = 0.5 * (target_s(s, z) + target_s(-s, z));
      if (sym < 1e-200) continue;
      // u = z^{1/4}(e^{s/2} − e^{−s/2})
      const double ua = q * (std::exp(0.5 * s) - std::exp(-0.5 * s));
      const double da = q * 0.5 * (std::exp(0.5 * s) + std::exp(-0.5 * s));
      const double pa = std::exp(-ua * ua) * da / std::sqrt(std::numbers::pi);
      // u = z^{1/4}e^{s/2} − e^{−s/2}
      const double ub = q * std::exp(0.5 * s) - std::exp(-0.5 * s);
      const double db = 0.5 * (q * std::exp(0.5 * s) + std::exp(-0.5 * s));
      const double pb = std::exp(-ub * ub) * db / std::sqrt(std::numbers::pi);
      worst_corrected = std::max(worst_corrected, std::abs(pa - sym) / sym);
      worst_printed = std::max(worst_printed, std::abs(pb - target_s(s, z)) / target_s(s, z));
      CHECK(tau_substitution(ua, z) == doctest::Approx(s).epsilon(1e-9));
    }
    CHECK(worst_corrected < 1e-12);
    if (z != 1.0) CHECK(worst_printed > 1e-2);
  }
}

TEST_CASE("tau sampler is exact: KS against quadrature CDF") {
  for (double z : {0.1, 1.0, 10.0}) CHECK(ks_pvalue_tau(draw_tau(z, 100000, 5), z) > 0.01);
  CHECK(ks_pvalue_tau(draw_tau(0.0, 50000, 6), 0.0) > 0.01);
}

TEST_CASE("tau sampler: E[exp(-tau)] at z = 4") {
  const auto x = draw_tau(4.0, 100000, 7);
  std::vector<double> w;
  for (double t : x) w.push_back(std::exp(-t));
  const auto est = stats::mean_estimate(w);
  const double exact = oracle::tau_expectation(4.0, [](double t) { return std::exp(-t); });
  CHECK(std::abs(est.value - exact) <= 3.0 * est.se);
}

TEST_CASE("tau sampler: the median at z = 1 is the quadrature median, not 0") {
  // Bisection on the quadrature CDF.
  double lo = -2.0, hi = 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (oracle::tau_cdf_sorted(1.0, {mid})[0] < 0.5 ? lo : hi) = mid;
  }
  const auto med = stats::quantile(draw_tau(1.0, 100000, 8), 0.5);
  CHECK(lo == doctest::Approx(-0.2177).epsilon(1e-3));
  CHECK(med.lo <= lo);
  CHECK(med.hi >= lo);
}

TEST_CASE("tau sampler is continuous at the z = 0 crossover") {
  auto a = draw_tau(0.0, 50000, 9);
  auto b = draw_tau(1e-290, 50000, 10);
  const auto qa = stats::quantile(a, 0.5), qb = stats::quantile(b, 0.5);
  CHECK(std::abs(qa.value - qb.value) <= 3.0 * std::hypot(qa.se, qb.se));
}

TEST_CASE("Gaussian resampling: single interior vertex") {
  const auto box = LatticeBox::cube(2, 1);
  const TauField tau(box);
  GaussianFieldSampler g(box, 1.0);
  g.set_conductances(tau);
  std::vector<double> x;
  for (int i = 0; i < 100000; ++i) {
    RngStream rng(11, static_cast<std::uint64_t>(i));
    x.push_back(g.sample(rng)(Coord{0, 0}));
  }
  const auto v = stats::variance_estimate(x);
  CHECK(std::abs(v.value - 0.25) <= 3.0 * v.se);
}

namespace {

void check_covariance(const LatticeBox& box, const TauField& tau, double kappa, int n, std::uint64_t seed) {
  GaussianFieldSampler g(box, kappa);
  g.set_conductances(tau);
  const auto& sites = g.interior();
  const std::size_t m = sites.size();
  std::vector<double> sum(m * m, 0.0);
  for (int i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    const auto phi = g.sample(rng);
    for (const auto& b : box.boundary_sites()) REQUIRE(phi(b) == 0.0);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) sum[a * m + b] += phi(sites[a]) * phi(sites[b]);
  }
  const auto dense = oracle::dirichlet_matrix(box, [&](const Edge& e) { return kappa * tau.a(e); });
  const auto inv = oracle::dense_inverse(dense);
  int outside = 0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      const double c = inv[a * m + b];
      const double se = std::sqrt((inv[a * m + a] * inv[b * m + b] + c * c) / n);
      if (std::abs(sum[a * m + b] / n - c) > 3.0 * se) ++outside;
    }
  // Interior order of the sampler and of the dense oracle is lexicographic in both.
  CHECK(outside == 0);
}

}  // namespace

TEST_CASE("Gaussian resampling: path covariance equals the inverse Laplacian") {
  const auto box = LatticeBox::cube(1, 2);
  check_covariance(box, TauField(box), 1.0, 100000, 12);
}

TEST_CASE("Gaussian resampling: general tau on 5x5 matches the dense inverse") {
  const auto box = LatticeBox::cube(2, 2);
  check_covariance(box, testing::random_tau(box, 13, 1.5), 2.0, 100000, 14);
}

TEST_CASE("config validation") {
  SamplerConfig c;
  c.kind = SamplerKind::phi_heatbath;
  c.delta = 0.1;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.delta = -1.0;
  c.kind = SamplerKind::joint_alternating;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("single interior vertex chain: phi(0) is Laplace with density ∝ exp(-4|phi|)") {
  const double exact = oracle::heatbath_conditional({0.0, 0.0}, 2.0).variance();
  CHECK(exact == doctest::Approx(0.125));
  for (auto kind : {SamplerKind::phi_heatbath, SamplerKind::joint_alternating}) {
    SamplerConfig c;
    c.dim = 1;
    c.L = 1;
    c.kind = kind;
    c.burn_in = 10;
    c.thinning = 1;
    c.n_samples = 40000;
    c.seed = 15;
    std::vector<double> x;
    run_chain(c, [&](const ChainSample& s) { x.push_back(s.phi(Coord{0})); });
    const auto v = stats::variance_estimate(x);
    CHECK(std::abs(v.value - exact) <= 3.0 * v.se);
  }
}

TEST_CASE("chains are bit-identical for a fixed seed") {
  for (auto kind : {SamplerKind::phi_heatbath, SamplerKind::joint_alternating}) {
    SamplerConfig c;
    c.L = 4;
    c.kind = kind;
    c.burn_in = 5;
    c.thinning = 2;
    c.n_samples = 3;
    c.seed = 77;
    const auto a = run_chain(c), b = run_chain(c);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].phi.values() == b[i].phi.values());
      CHECK(a[i].tau.values() == b[i].tau.values());
    }
    c.seed = 78;
    CHECK(run_chain(c)[0].phi.values() != a[0].phi.values());
  }
}

TEST_CASE("the two sampler kinds agree on the central-edge gradient (L=4)") {
  std::vector<stats::Estimate> est;
  for (auto kind : {SamplerKind::phi_heatbath, SamplerKind::joint_alternating}) {
    SamplerConfig c;
    c.L = 4;
    c.kind = kind;
    c.burn_in = 200;
    c.thinning = 2;
    c.n_samples = 6000;
    c.seed = 21;
    std::vector<double> g2;
    run_chain(c, [&](const ChainSample& s) {
      const double g = gradient(s.phi, Edge{Coord{0, 0}, 0});
      g2.push_back(g * g);
    });
    est.push_back(stats::batch_mean_estimate(g2, 30));
  }
  CHECK(std::abs(est[0].value - est[1].value) <= 3.0 * std::hypot(est[0].se, est[1].se));
}
