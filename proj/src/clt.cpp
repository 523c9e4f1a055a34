#include "soslab/clt.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "soslab/errors.hpp"

namespace soslab {

namespace {

constexpr double kPi = std::numbers::pi;

double odd_double_factorial(int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r *= 2.0 * j - 1.0;
  return r;
}

void need_samples(std::size_t n, std::size_t min, const char* what) {
  if (n < min)
    throw StatisticsError(std::string(what) + ": " + std::to_string(n) + " samples, need at least " +
                          std::to_string(min));
}

stats::Estimate chain_mean(std::span<const double> x) {
  return x.size() >= 40 ? stats::batch_mean_estimate(x) : stats::mean_estimate(x);
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : p(n ? fftw_alloc_real(n) : nullptr) {}
  FftwBuffer(const FftwBuffer&) = delete;
  ~FftwBuffer() { fftw_free(p); }
  double* p;
};

struct SpdRoot {
  Eigen::MatrixXd root;
  double sqrt_det = 1.0;
  double lambda_min = 0.0;
};

SpdRoot spd_root(const Eigen::MatrixXd& a, int dim) {
  if (a.rows() != dim || a.cols() != dim) throw DomainError("ā: expected a " + std::to_string(dim) + "×" + std::to_string(dim) + " matrix");
  if (!a.allFinite() || (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * a.cwiseAbs().maxCoeff())
    throw DomainError("ā must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.eigenvalues().minCoeff() <= 0.0) throw DomainError("ā must be positive definite");
  SpdRoot r;
  r.root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  r.sqrt_det = es.eigenvalues().cwiseSqrt().prod();
  r.lambda_min = es.eigenvalues().minCoeff();
  return r;
}

// Fourier transform of the fundamental solution of −Δ truncated to |x| < D.
double truncated_kernel_hat(double k, double D, int dim) {
  if (dim == 1) {
    if (k == 0.0) return -0.5 * D * D;
    return (1.0 - std::cos(k * D)) / (k * k) - D * std::sin(k * D) / k;
  }
  if (dim == 2) {
    if (k == 0.0) return 0.25 * D * D - 0.5 * D * D * std::log(D);
    return (1.0 - std::cyl_bessel_j(0.0, k * D)) / (k * k) - D * std::log(D) * std::cyl_bessel_j(1.0, k * D) / k;
  }
  if (k == 0.0) return 0.5 * D * D;
  return (1.0 - std::cos(k * D)) / (k * k);
}

// ∫ g (−Δ)⁻¹ g for g supported in |y| < rho, on an N^d periodic grid large
// enough that the truncated kernel sees no periodic image.
double free_space_form(const std::function<double(const Point&)>& g, int dim, double rho, int N) {
  const double D = 2.0 * rho;
  const double P = 2.0 * rho + D + 0.4 * rho;
  const double h = P / N;
  std::size_t total = 1, ctotal = 1;
  for (int i = 0; i < dim; ++i) {
    total *= static_cast<std::size_t>(N);
    ctotal *= static_cast<std::size_t>(i == dim - 1 ? N / 2 + 1 : N);
  }
  FftwBuffer in(total), back(total);
  auto* spec = fftw_alloc_complex(ctotal);
  std::array<int, 3> n{N, N, N};
  fftw_plan fwd = fftw_plan_dft_r2c(dim, n.data(), in.p, spec, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_c2r(dim, n.data(), spec, back.p, FFTW_ESTIMATE);

  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    Point y{};
    for (int i = dim - 1; i >= 0; --i) {
      const auto j = rest % static_cast<std::size_t>(N);
      rest /= static_cast<std::size_t>(N);
      y[static_cast<std::size_t>(i)] = -0.5 * P + static_cast<double>(j) * h;
    }
    in.p[k] = g(y);
  }
  fftw_execute(fwd);
  const int last = N / 2 + 1;
  // The kernel is radial: cache it by the integer |m|².
  std::vector<double> kernel(static_cast<std::size_t>(dim) * (N / 2) * (N / 2) + 1,
                             std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < ctotal; ++k) {
    std::size_t rest = k;
    std::size_t m2 = 0;
    for (int i = dim - 1; i >= 0; --i) {
      const int len = i == dim - 1 ? last : N;
      int m = static_cast<int>(rest % static_cast<std::size_t>(len));
      rest /= static_cast<std::size_t>(len);
      if (i != dim - 1 && m > N / 2) m -= N;
      m2 += static_cast<std::size_t>(m * m);
    }
    double& G = kernel[m2];
    if (std::isnan(G)) G = truncated_kernel_hat(2.0 * kPi * std::sqrt(static_cast<double>(m2)) / P, D, dim);
    spec[k][0] *= G;
    spec[k][1] *= G;
  }
  fftw_execute(inv);
  double s = 0.0;
  for (std::size_t k = 0; k < total; ++k) s += in.p[k] * back.p[k];
  s *= std::pow(h, dim) / static_cast<double>(total);
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(spec);
  return s;
}

int default_grid(int dim) {
  switch (dim) {
    case 1: return 4096;
    case 2: return 512;
    default: return 64;
  }
}

struct GaussLegendre {
  std::vector<double> x, w;  // on [−1, 1]
};

GaussLegendre gauss_legendre(int n) {
  GaussLegendre q;
  q.x.resize(static_cast<std::size_t>(n));
  q.w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    q.x[static_cast<std::size_t>(i)] = x;
    q.w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

TestVectorField at_scale(const TestVectorField& f, double R) {
  TestVectorField g = f;
  g.R = R;
  return g;
}

void check_test_vector(const VertexFunction& v, const LatticeBox& box) {
  if (v.box().dim() != box.dim() || v.box().lo() != box.lo() || v.box().hi() != box.hi())
    throw DomainError("brascamp_lieb: v must live on the τ box");
  double sum = 0.0, mass = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    sum += v[k];
    mass += std::abs(v[k]);
    if (v[k] != 0.0 && box.is_boundary(v.indexer().coord(k)))
      throw DomainError("brascamp_lieb: v must vanish on the boundary");
  }
  if (std::abs(sum) > 1e-12 * std::max(mass, 1.0)) throw DomainError("brascamp_lieb: v must have zero sum");
}

// Δ⁻¹v with zero Dirichlet data and the squared gradients on the edges of Q_L.
struct UnitPotential {
  std::vector<Edge> edges;
  std::vector<double> grad2;
  double energy = 0.0;
};

UnitPotential unit_potential(const VertexFunction& v, SolverOptions options) {
  const auto op = ConductanceOperator::unit(v.box(), BoundaryMode::dirichlet, options);
  const auto z = op.solve(nullptr, &v, nullptr).solution;
  UnitPotential u;
  u.edges = op.edges();
  u.grad2.reserve(u.edges.size());
  for (const auto& e : u.edges) {
    const double g = z(e.head()) - z(e.base);
    u.grad2.push_back(g * g);
    u.energy += g * g;
  }
  return u;
}

BrascampLiebSample bl_sample(const TauField& tau, const VertexFunction& v, const UnitPotential& z,
                             SolverOptions options) {
  const ConductanceOperator op(tau.box(), tau, BoundaryMode::dirichlet, options);
  const auto y = op.solve(nullptr, &v, nullptr).solution;
  BrascampLiebSample s;
  for (std::size_t k = 0; k < v.size(); ++k) s.lhs += v[k] * y[k];
  for (std::size_t k = 0; k < z.edges.size(); ++k) s.rhs += z.grad2[k] * std::exp(-tau(z.edges[k]));
  s.violated = s.lhs > s.rhs * (1.0 + 1e3 * options.tolerance) + 1e-300;
  return s;
}

void summarize_bl(BrascampLiebReport& rep) {
  rep.violations = 0;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& s : rep.samples) {
    if (s.violated) ++rep.violations;
    const double m = s.rhs > 0.0 ? (s.rhs - s.lhs) / s.rhs : 0.0;
    rep.min_margin = std::min(rep.min_margin, m);
  }
  if (rep.samples.empty()) rep.min_margin = 0.0;
}

}  // namespace

std::vector<double> sample_F_R(std::span<const PhiField> phi, const TestVectorField& f) {
  std::vector<double> out;
  out.reserve(phi.size());
  for (const auto& p : phi) out.push_back(evaluate_F_R(p, f));
  return out;
}

VarianceEstimate variance_direct(std::span<const double> F_values) {
  need_samples(F_values.size(), kMinCltSamples, "variance_direct");
  VarianceEstimate r;
  r.n = F_values.size();
  r.variance = stats::variance_estimate(F_values);
  r.mean = chain_mean(F_values);
  r.per_sample.assign(F_values.begin(), F_values.end());
  return r;
}

VarianceEstimate variance_direct(std::span<const PhiField> phi, const TestVectorField& f) {
  need_samples(phi.size(), kMinCltSamples, "variance_direct");
  const auto F = sample_F_R(phi, f);
  return variance_direct(F);
}

double tau_route_energy(const TauField& tau, const TestVectorField& f, SolverOptions options) {
  const auto& box = tau.box();
  if (f.dim != box.dim()) throw DomainError("tau_route_energy: dimension mismatch");
  const ConductanceOperator op(box, tau, BoundaryMode::dirichlet, options);
  const auto fR = sample_on_edges(f, box);
  const auto u = solve_dirichlet_divergence(op, fR, VertexFunction(box)).solution;
  double s = 0.0;
  for (const auto& e : op.edges()) s += fR(e) * (u(e.head()) - u(e.base));
  return s * std::pow(f.R, -static_cast<double>(box.dim()));
}

VarianceEstimate variance_tau_route(std::span<const TauField> tau, const TestVectorField& f, double precision_scale,
                                    SolverOptions options) {
  need_samples(tau.size(), kMinCltSamples, "variance_tau_route");
  if (!(precision_scale > 0.0)) throw DomainError("variance_tau_route: precision scale must be positive");
  VarianceEstimate r;
  r.n = tau.size();
  std::vector<double> ok;
  for (const auto& t : tau) {
    try {
      const double e = tau_route_energy(t, f, options) / precision_scale;
      r.per_sample.push_back(e);
      ok.push_back(e);
    } catch (const SolverError&) {
      ++r.failures;
      r.per_sample.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  need_samples(ok.size(), 2, "variance_tau_route (successful solves)");
  r.variance = chain_mean(ok);
  return r;
}

GffPrediction gff_quadrature(const Eigen::MatrixXd& a_bar, const TestVectorField& f, GffQuadratureOptions options) {
  const int d = f.dim;
  if (d < 1 || d > kMaxDim) throw DomainError("gff_quadrature: dimension must be 1, 2 or 3");
  if (options.levels < 1) throw DomainError("gff_quadrature: need at least one level");
  const auto A = spd_root(a_bar, d);
  const double rho = f.support_radius / std::sqrt(A.lambda_min);
  auto g = [&](const Point& y) {
    Point x{};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(i)] += A.root(i, j) * y[static_cast<std::size_t>(j)];
    return f.div(x);
  };
  GffPrediction p;
  int N = options.grid > 0 ? options.grid : default_grid(d);
  for (int l = 0; l < options.levels; ++l, N *= 2) {
    p.grids.push_back(N);
    p.raw.push_back(A.sqrt_det * free_space_form(g, d, rho, N));
  }
  // The trapezoidal error oscillates in h for cut-off test fields, so the
  // finest level is reported and the last refinement step bounds the error.
  p.value = p.raw.back();
  if (p.raw.size() >= 2) p.error = std::abs(p.raw.back() - p.raw[p.raw.size() - 2]);
  return p;
}

double predict_gff_variance(const Eigen::MatrixXd& a_bar, const TestVectorField& f, GffQuadratureOptions options) {
  return gff_quadrature(a_bar, f, options).value;
}

double predict_gff_variance(double a_bar, const TestVectorField& f, GffQuadratureOptions options) {
  if (!(a_bar > 0.0) || !std::isfinite(a_bar)) throw DomainError("predict_gff_variance: ā must be positive");
  const auto unit = gff_quadrature(Eigen::MatrixXd::Identity(f.dim, f.dim), f, options).value;
  return unit / a_bar;
}

double gff_variance_real_space(double a_bar, const TestVectorField& f, int radial_nodes, int angles) {
  if (f.dim != 2) throw DomainError("gff_variance_real_space: dimension 2 only");
  if (!(a_bar > 0.0)) throw DomainError("gff_variance_real_space: ā must be positive");
  const double rho = f.support_radius;
  const auto gl = gauss_legendre(radial_nodes);
  const int modes = angles / 2;
  using cd = std::complex<double>;
  auto modes_at = [&](double r) {
    std::vector<cd> gm(static_cast<std::size_t>(modes), cd{});
    for (int j = 0; j < angles; ++j) {
      const double th = 2.0 * kPi * j / angles;
      const double v = f.div({r * std::cos(th), r * std::sin(th), 0.0});
      for (int m = 0; m < modes; ++m) gm[static_cast<std::size_t>(m)] += v * std::polar(1.0, -m * th);
    }
    for (auto& c : gm) c /= static_cast<double>(angles);
    return gm;
  };
  std::vector<double> J(static_cast<std::size_t>(modes), 0.0);
  for (std::size_t a = 0; a < gl.x.size(); ++a) {
    const double r = 0.5 * rho * (gl.x[a] + 1.0);
    const double wr = 0.5 * rho * gl.w[a];
    const auto outer = modes_at(r);
    std::vector<cd> inner(static_cast<std::size_t>(modes), cd{});
    for (std::size_t b = 0; b < gl.x.size(); ++b) {
      const double s = 0.5 * r * (gl.x[b] + 1.0);
      const double ws = 0.5 * r * gl.w[b];
      const auto gs = modes_at(s);
      for (int m = 0; m < modes; ++m) inner[static_cast<std::size_t>(m)] += ws * std::pow(s, 1 + m) * gs[static_cast<std::size_t>(m)];
    }
    J[0] += 2.0 * wr * r * std::log(r) * (outer[0] * std::conj(inner[0])).real();
    for (int m = 1; m < modes; ++m)
      J[static_cast<std::size_t>(m)] +=
          2.0 * wr * std::pow(r, 1 - m) * (outer[static_cast<std::size_t>(m)] * std::conj(inner[static_cast<std::size_t>(m)])).real();
  }
  double I = -2.0 * kPi * J[0];
  for (int m = 1; m < modes; ++m) I += 2.0 * kPi * J[static_cast<std::size_t>(m)] / m;
  return I / a_bar;
}

double gff_variance_box(const Eigen::MatrixXd& a_bar, const TestVectorField& f, double half_side, int grid) {
  const int d = f.dim;
  spd_root(a_bar, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && a_bar(i, j) != 0.0) throw DomainError("gff_variance_box: ā must be diagonal");
  if (!(half_side > f.support_radius)) throw DomainError("gff_variance_box: support of f must lie inside the box");
  const double B = half_side;
  int N = grid;
  if (N <= 0) {
    const int cap = d == 3 ? 256 : 4096;
    N = 64;
    while (N < cap && N < 2.0 * B * 128.0) N *= 2;
    N -= 1;
  }
  const double h = 2.0 * B / (N + 1);
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(N);
  FftwBuffer in(total), out(total);
  std::array<int, 3> n{N, N, N};
  std::array<fftw_r2r_kind, 3> kinds{FFTW_RODFT00, FFTW_RODFT00, FFTW_RODFT00};
  fftw_plan plan = fftw_plan_r2r(d, n.data(), in.p, out.p, kinds.data(), FFTW_ESTIMATE);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    Point x{};
    for (int i = d - 1; i >= 0; --i) {
      const auto j = rest % static_cast<std::size_t>(N);
      rest /= static_cast<std::size_t>(N);
      x[static_cast<std::size_t>(i)] = -B + static_cast<double>(j + 1) * h;
    }
    in.p[k] = f.div(x);
  }
  fftw_execute(plan);
  const double scale = std::pow(h / (2.0 * std::sqrt(B)), d);
  double s = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    double lambda = 0.0;
    for (int i = d - 1; i >= 0; --i) {
      const auto m = rest % static_cast<std::size_t>(N) + 1;
      rest /= static_cast<std::size_t>(N);
      const double km = kPi * static_cast<double>(m) / (2.0 * B);
      lambda += a_bar(i, i) * km * km;
    }
    const double c = scale * out.p[k];
    s += c * c / lambda;
  }
  fftw_destroy_plan(plan);
  return s;
}

VertexFunction dipole(const LatticeBox& box, const Coord& at, int axis) {
  const Coord y = at + unit_vector(axis);
  if (!box.contains(at) || !box.contains(y) || box.is_boundary(at) || box.is_boundary(y))
    throw DomainError("dipole: both sites must be interior");
  VertexFunction v(box);
  v(at) = 1.0;
  v(y) = -1.0;
  return v;
}

BrascampLiebSample brascamp_lieb_sample(const TauField& tau, const VertexFunction& v, SolverOptions options) {
  check_test_vector(v, tau.box());
  return bl_sample(tau, v, unit_potential(v, options), options);
}

BrascampLiebReport brascamp_lieb_check(std::span<const TauField> tau, const VertexFunction& v, SolverOptions options) {
  BrascampLiebReport rep;
  if (tau.empty()) return rep;
  check_test_vector(v, tau.front().box());
  const auto z = unit_potential(v, options);
  rep.dirichlet_energy = z.energy;
  for (const auto& t : tau) {
    check_test_vector(v, t.box());
    rep.samples.push_back(bl_sample(t, v, z, options));
  }
  summarize_bl(rep);
  return rep;
}

BrascampLiebReport brascamp_lieb_check(std::span<const ChainSample> samples, const VertexFunction& v, int k_max,
                                       double precision_scale, SolverOptions options) {
  if (k_max < 1) throw DomainError("brascamp_lieb_check: k must be at least 1");
  if (!(precision_scale > 0.0)) throw DomainError("brascamp_lieb_check: precision scale must be positive");
  need_samples(samples.size(), kMinCltSamples, "brascamp_lieb_check");
  BrascampLiebReport rep;
  check_test_vector(v, samples.front().tau.box());
  const auto z = unit_potential(v, options);
  rep.dirichlet_energy = z.energy;

  std::vector<double> X;
  std::vector<std::vector<double>> inv(static_cast<std::size_t>(k_max), std::vector<double>(z.edges.size(), 0.0));
  for (const auto& s : samples) {
    check_test_vector(v, s.tau.box());
    rep.samples.push_back(bl_sample(s.tau, v, z, options));
    double x = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) x += v[k] * s.phi[k];
    X.push_back(x);
    for (std::size_t e = 0; e < z.edges.size(); ++e) {
      const double t = s.tau(z.edges[e]);
      for (int k = 1; k <= k_max; ++k) inv[static_cast<std::size_t>(k - 1)][e] += std::exp(-k * t);
    }
  }
  summarize_bl(rep);

  const double n = static_cast<double>(samples.size());
  for (int k = 1; k <= k_max; ++k) {
    BrascampLiebMoment m;
    m.k = k;
    std::vector<double> powers;
    powers.reserve(X.size());
    for (double x : X) powers.push_back(std::pow(x, 2 * k));
    m.moment = chain_mean(powers);
    // ⟨(Σ_e c_e e^{−τ_e})^k⟩ ≤ (Σ_e c_e ⟨e^{−kτ_e}⟩^{1/k})^k by Hölder.
    double s = 0.0;
    for (std::size_t e = 0; e < z.edges.size(); ++e)
      s += z.grad2[e] * std::pow(inv[static_cast<std::size_t>(k - 1)][e] / n, 1.0 / k);
    m.bound = odd_double_factorial(k) * std::pow(s / precision_scale, k);
    m.C_k = z.energy > 0.0 ? m.bound / std::pow(z.energy, k) : 0.0;
    m.verdict = m.moment.lo(3.0) <= m.bound ? "consistent" : "inconsistent";
    rep.moments.push_back(m);
  }
  return rep;
}

MomentStructure moment_structure(std::span<const double> F_values, int k_max) {
  if (k_max < 1) throw DomainError("moment_structure: k must be at least 1");
  need_samples(F_values.size(), kMinCltSamples * static_cast<std::size_t>(k_max), "moment_structure");
  MomentStructure m;
  m.m1 = chain_mean(F_values);
  m.m2 = stats::central_moment(F_values, 2);
  m.m3 = stats::central_moment(F_values, 3);
  for (int k = 2; k <= k_max; ++k) {
    m.even_moments.push_back(stats::central_moment(F_values, 2 * k));
    m.wick_ratios.push_back(stats::wick_ratio(F_values, k));
  }
  return m;
}

EnergyProfile energy_convergence(std::span<const EnergyLevel> levels, const TestVectorField& f,
                                 const Eigen::MatrixXd& a_bar, SolverOptions options) {
  EnergyProfile prof;
  const auto cont = gff_quadrature(a_bar, f);
  prof.continuum_coarse = cont.raw.front();
  prof.continuum_fine = cont.raw.back();
  prof.resolution_gap =
      std::abs(prof.continuum_fine - prof.continuum_coarse) / std::max(std::abs(prof.continuum_fine), 1e-300);
  bool diagonal = true;
  for (int i = 0; i < f.dim; ++i)
    for (int j = 0; j < f.dim; ++j)
      if (i != j && a_bar(i, j) != 0.0) diagonal = false;
  for (const auto& lvl : levels) {
    if (lvl.tau.empty()) throw StatisticsError("energy_convergence: level without samples");
    const auto fR = at_scale(f, lvl.R);
    EnergyPoint p;
    p.R = lvl.R;
    p.L = lvl.tau.front().box().hi()[0];
    std::vector<double> e;
    for (const auto& t : lvl.tau) {
      try {
        e.push_back(tau_route_energy(t, fR, options));
      } catch (const SolverError&) {
        ++p.failures;
      }
    }
    if (e.empty()) throw SolverError("energy_convergence: every solve failed at R = " + std::to_string(lvl.R));
    p.energy = e.size() >= 2 ? chain_mean(e) : stats::Estimate{e.front(), 0.0};
    p.continuum = prof.continuum_fine;
    p.gap = {p.energy.value - p.continuum, p.energy.se};
    if (diagonal) {
      p.continuum_box = gff_variance_box(a_bar, f, static_cast<double>(p.L) / lvl.R);
      p.box_gap = {p.energy.value - p.continuum_box, p.energy.se};
    }
    prof.points.push_back(p);
  }
  if (prof.points.size() >= 2) {
    const auto& a = prof.points[prof.points.size() - 2];
    const auto& b = prof.points.back();
    prof.last_two_non_increasing =
        std::abs(b.gap.value) <= std::abs(a.gap.value) + 3.0 * std::hypot(a.gap.se, b.gap.se);
  }
  return prof;
}

CltReport clt_report(std::span<const ChainSample> samples, const TestVectorField& f, double a_bar, double delta,
                     int bl_k_max, double precision_scale, SolverOptions options) {
  need_samples(samples.size(), kMinCltSamples, "clt_report");
  CltReport r;
  const auto& box = samples.front().phi.box();
  r.dim = box.dim();
  r.R = f.R;
  r.L = box.hi()[0];
  r.delta = delta;
  r.n_samples = samples.size();
  std::vector<double> F;
  std::vector<TauField> tau;
  for (const auto& s : samples) {
    F.push_back(evaluate_F_R(s.phi, f));
    tau.push_back(s.tau);
  }
  r.var_direct = variance_direct(F);
  r.var_tau = variance_tau_route(tau, f, precision_scale, options);
  r.a_bar = a_bar;
  r.var_gff = predict_gff_variance(precision_scale * a_bar, f);
  const int k_max = static_cast<int>(std::min<std::size_t>(3, samples.size() / kMinCltSamples));
  r.moments = moment_structure(F, k_max);
  const Coord origin{};
  r.brascamp_lieb = brascamp_lieb_check(samples, dipole(box, origin, 0), bl_k_max, precision_scale, options);
  const double sigma = std::hypot(r.var_direct.variance.se, r.var_tau.variance.se);
  r.route_z = sigma > 0.0 ? std::abs(r.var_direct.variance.value - r.var_tau.variance.value) / sigma : 0.0;
  r.routes_consistent = r.route_z <= 3.0;
  return r;
}

}  // namespace soslab
