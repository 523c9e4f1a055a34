#include "soslab/sampler.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "soslab/errors.hpp"

namespace soslab {

std::string to_string(SamplerKind k) {
  return k == SamplerKind::phi_heatbath ? "phi-heatbath" : "joint-alternating";
}

SamplerKind sampler_kind_from_string(const std::string& s) {
  if (s == "phi-heatbath") return SamplerKind::phi_heatbath;
  if (s == "joint-alternating") return SamplerKind::joint_alternating;
  throw DomainError("unknown sampler kind '" + s + "'");
}

void SamplerConfig::validate() const {
  if (dim < 1 || dim > kMaxDim) throw DomainError("sampler.dim must be 1, 2 or 3");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("sampler.delta must be >= 0");
  if (L < 1) throw DomainError("sampler.L must be >= 1");
  if (burn_in < 0) throw DomainError("sampler.burn_in must be >= 0");
  if (thinning < 1) throw DomainError("sampler.thinning must be >= 1");
  if (n_samples < 0) throw DomainError("sampler.n_samples must be >= 0");
  if (kind == SamplerKind::phi_heatbath && delta != 0.0)
    throw DomainError("sampler.kind phi-heatbath requires delta = 0");
}

double heatbath_phi_site(std::span<const double> neighbours, double beta, RngStream& rng) {
  constexpr int kMax = 2 * kMaxDim;
  const int m = static_cast<int>(neighbours.size());
  if (m < 1 || m > kMax) throw DomainError("heat-bath site needs 1..6 neighbours");
  std::array<double, kMax> c{};
  std::copy(neighbours.begin(), neighbours.end(), c.begin());
  std::sort(c.begin(), c.begin() + m);

  std::array<double, kMax> level{};  // log-density at each breakpoint
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += std::abs(c[j] - c[i]);
    level[j] = -beta * s;
  }
  const double outer = beta * m;
  std::array<double, kMax + 1> logmass{};
  logmass[0] = level[0] - std::log(outer);
  logmass[m] = level[m - 1] - std::log(outer);
  for (int k = 1; k < m; ++k) {
    const double w = c[k] - c[k - 1];
    const double slope = beta * (m - 2 * k);
    if (w <= 0.0) {
      logmass[k] = -std::numeric_limits<double>::infinity();
    } else if (slope == 0.0) {
      logmass[k] = level[k - 1] + std::log(w);
    } else {
      const double a = std::abs(slope);
      logmass[k] = std::max(level[k - 1], level[k]) + std::log(-std::expm1(-a * w) / a);
    }
  }
  double top = logmass[0];
  for (int k = 1; k <= m; ++k) top = std::max(top, logmass[k]);
  std::array<double, kMax + 1> cum{};
  double acc = 0.0;
  for (int k = 0; k <= m; ++k) {
    acc += std::exp(logmass[k] - top);
    cum[k] = acc;
  }
  const double pick = rng.uniform() * acc;
  int k = 0;
  while (k < m && cum[k] <= pick) ++k;
  const double u = rng.uniform();
  if (k == 0) return c[0] + std::log(u) / outer;
  if (k == m) return c[m - 1] - std::log(u) / outer;
  const double w = c[k] - c[k - 1];
  const double slope = beta * (m - 2 * k);
  if (slope == 0.0) return c[k - 1] + u * w;
  if (slope < 0.0) return c[k - 1] + std::log1p(u * std::expm1(slope * w)) / slope;
  return c[k] + std::log1p(u * std::expm1(-slope * w)) / slope;
}

double heatbath_phi_site(const VertexFunction& phi, const Coord& x, double beta, RngStream& rng) {
  const int d = phi.box().dim();
  std::array<double, 2 * kMaxDim> nb{};
  int m = 0;
  for (int i = 0; i < d; ++i) {
    Coord y = x;
    ++y[i];
    nb[m++] = phi(y);
    y[i] -= 2;
    nb[m++] = phi(y);
  }
  return heatbath_phi_site(std::span<const double>(nb.data(), static_cast<std::size_t>(m)), beta, rng);
}

double tau_substitution(double u, double z) { return 2.0 * std::asinh(u / (2.0 * std::pow(z, 0.25))); }

double sample_tau_given_gradient(double g, double delta, RngStream& rng) {
  const double z = delta + g * g;
  if (!(z >= 0.0)) throw DomainError("sample_tau_given_gradient: negative z");
  if (z < 1e-300) return -std::log(rng.gamma_half());
  const double u = rng.normal() * std::sqrt(0.5);
  double s = std::abs(tau_substitution(u, z));
  if (rng.uniform() * (1.0 + std::exp(-s)) < 1.0) s = -s;
  return s - 0.5 * std::log(z);
}

struct GaussianFieldSampler::Impl {
  LatticeBox box;
  double kappa = 2.0;
  BoxIndexer ix;
  std::vector<Coord> interior;
  std::vector<int> local;  // per box site, -1 on the boundary
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  bool analysed = false;
  bool factored = false;
};

GaussianFieldSampler::GaussianFieldSampler(const LatticeBox& box, double precision_scale)
    : impl_(std::make_unique<Impl>()) {
  if (!(precision_scale > 0.0)) throw DomainError("precision scale must be positive");
  impl_->box = box;
  impl_->kappa = precision_scale;
  impl_->ix = BoxIndexer(box.dim(), box.lo(), box.hi());
  impl_->local.assign(impl_->ix.size(), -1);
  for (std::size_t k = 0; k < impl_->ix.size(); ++k) {
    const Coord x = impl_->ix.coord(k);
    if (!box.is_boundary(x)) {
      impl_->local[k] = static_cast<int>(impl_->interior.size());
      impl_->interior.push_back(x);
    }
  }
}

GaussianFieldSampler::GaussianFieldSampler(GaussianFieldSampler&&) noexcept = default;
GaussianFieldSampler& GaussianFieldSampler::operator=(GaussianFieldSampler&&) noexcept = default;
GaussianFieldSampler::~GaussianFieldSampler() = default;

const std::vector<Coord>& GaussianFieldSampler::interior() const { return impl_->interior; }

void GaussianFieldSampler::set_conductances(const TauField& tau) {
  auto& im = *impl_;
  const int d = im.box.dim();
  const auto n = static_cast<Eigen::Index>(im.interior.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(im.interior.size() * static_cast<std::size_t>(2 * d + 1));
  for (std::size_t r = 0; r < im.interior.size(); ++r) {
    const Coord x = im.interior[r];
    double diag = 0.0;
    for (int i = 0; i < d; ++i) {
      Coord y = x;
      ++y[i];
      const double up = im.kappa * tau.a(Edge{x, i});
      Coord w = x;
      --w[i];
      const double down = im.kappa * tau.a(Edge{w, i});
      diag += up + down;
      const int jy = im.local[im.ix.index(y)];
      if (jy >= 0) trip.emplace_back(static_cast<int>(r), jy, -up);
      const int jw = im.local[im.ix.index(w)];
      if (jw >= 0) trip.emplace_back(static_cast<int>(r), jw, -down);
    }
    trip.emplace_back(static_cast<int>(r), static_cast<int>(r), diag);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  if (!im.analysed) {
    im.llt.analyzePattern(A);
    im.analysed = true;
  }
  im.llt.factorize(A);
  im.factored = im.llt.info() == Eigen::Success;
  if (!im.factored) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& e : enumerate_edges(im.box)) {
      lo = std::min(lo, tau.tau(e));
      hi = std::max(hi, tau.tau(e));
    }
    throw SolverError("Cholesky of kappa*D_L(tau) failed; tau range [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
}

PhiField GaussianFieldSampler::sample(RngStream& rng) const {
  const auto& im = *impl_;
  if (!im.factored) throw SolverError("GaussianFieldSampler: conductances not set");
  Eigen::VectorXd xi(static_cast<Eigen::Index>(im.interior.size()));
  for (Eigen::Index k = 0; k < xi.size(); ++k) xi[k] = rng.normal();
  const Eigen::VectorXd y = im.llt.matrixU().solve(xi);
  const Eigen::VectorXd x = im.llt.permutationPinv() * y;
  PhiField phi(im.box, BoundaryCondition::dirichlet_zero);
  for (std::size_t r = 0; r < im.interior.size(); ++r) phi(im.interior[r]) = x[static_cast<Eigen::Index>(r)];
  return phi;
}

PhiField resample_phi_given_tau(const TauField& tau, RngStream& rng, double precision_scale) {
  tau.check_invariants();
  GaussianFieldSampler s(tau.box(), precision_scale);
  s.set_conductances(tau);
  return s.sample(rng);
}

Chain::Chain(const SamplerConfig& config) : config_(config) {
  config_.validate();
  box_ = LatticeBox::cube(config_.dim, config_.L);
  phi_ = PhiField(box_, BoundaryCondition::dirichlet_zero);
  tau_ = TauField(box_);
  edges_ = enumerate_edges(box_);
  if (config_.kind == SamplerKind::joint_alternating)
    gauss_ = std::make_unique<GaussianFieldSampler>(box_, kModelPrecisionScale);
}

Chain::Chain(Chain&&) noexcept = default;
Chain::~Chain() = default;

void Chain::sweep() {
  if (config_.kind == SamplerKind::phi_heatbath)
    heatbath_sweep();
  else
    joint_sweep();
  ++sweeps_;
}

void Chain::heatbath_sweep() {
  const auto& ix = phi_.indexer();
  for (int colour = 0; colour < 2; ++colour)
    for (std::size_t k = 0; k < ix.size(); ++k) {
      const Coord x = ix.coord(k);
      std::int64_t parity = 0;
      for (int i = 0; i < config_.dim; ++i) parity += x[i];
      if (((parity % 2) + 2) % 2 != colour || box_.is_boundary(x)) continue;
      RngStream rng(config_.seed, StreamId{StreamKind::heatbath, config_.chain, static_cast<std::uint64_t>(sweeps_), k});
      phi_[k] = heatbath_phi_site(phi_, x, kModelCoupling, rng);
    }
}

void Chain::joint_sweep() {
  const auto s = static_cast<std::uint64_t>(sweeps_);
  for (const auto& e : edges_) {
    RngStream rng(config_.seed, StreamId{StreamKind::tau_update, config_.chain, s, tau_.slot(e)});
    tau_(e) = sample_tau_given_gradient(phi_(e.head()) - phi_(e.base), config_.delta, rng);
  }
  gauss_->set_conductances(tau_);
  RngStream rng(config_.seed, StreamId{StreamKind::gaussian, config_.chain, s, 0});
  phi_ = gauss_->sample(rng);
}

TauField Chain::tau() const {
  if (config_.kind == SamplerKind::joint_alternating) return tau_;
  TauField t(box_);
  const auto s = static_cast<std::uint64_t>(sweeps_);
  for (const auto& e : edges_) {
    RngStream rng(config_.seed, StreamId{StreamKind::tau_update, config_.chain, s, t.slot(e)});
    t(e) = sample_tau_given_gradient(phi_(e.head()) - phi_(e.base), config_.delta, rng);
  }
  return t;
}

std::vector<ChainSample> run_chain(const SamplerConfig& config, const std::function<void(const ChainSample&)>& on_sample) {
  Chain chain(config);
  for (int k = 0; k < config.burn_in; ++k) chain.sweep();
  std::vector<ChainSample> out;
  for (int n = 0; n < config.n_samples; ++n) {
    for (int k = 0; k < config.thinning; ++k) chain.sweep();
    ChainSample s{chain.phi(), chain.tau(), chain.sweeps_done()};
    if (on_sample)
      on_sample(s);
    else
      out.push_back(std::move(s));
  }
  return out;
}

}  // namespace soslab
