#include "soslab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "soslab/errors.hpp"

namespace soslab::oracle {

DenseProblem make_dense(std::size_t n) {
  if (n > kDenseCap) throw DomainError("dense oracle: dimension above cap");
  DenseProblem p;
  p.n = n;
  p.a.assign(n * n, 0.0);
  p.b.assign(n, 0.0);
  return p;
}

namespace {

// Row-major lower factor L with A = L Lᵀ, in long double.
std::vector<long double> cholesky(const DenseProblem& p) {
  if (p.n > kDenseCap) throw DomainError("dense oracle: dimension above cap");
  const std::size_t n = p.n;
  std::vector<long double> L(n * n, 0.0L);
  for (std::size_t j = 0; j < n; ++j) {
    long double d = p.at(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= L[j * n + k] * L[j * n + k];
    if (!(d > 0.0L)) throw DomainError("dense oracle: matrix is not positive definite");
    const long double ljj = std::sqrt(d);
    L[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      long double s = p.at(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
      L[i * n + j] = s / ljj;
    }
  }
  return L;
}

std::vector<long double> substitute(const std::vector<long double>& L, std::size_t n, std::vector<long double> y) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= L[i * n + k] * y[k];
    y[i] /= L[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= L[k * n + ii] * y[k];
    y[ii] /= L[ii * n + ii];
  }
  return y;
}

}  // namespace

std::vector<double> dense_solve(const DenseProblem& p) {
  const auto L = cholesky(p);
  std::vector<long double> y(p.b.begin(), p.b.end());
  y = substitute(L, p.n, std::move(y));
  return {y.begin(), y.end()};
}

std::vector<double> dense_inverse(const DenseProblem& p) {
  const auto L = cholesky(p);
  const std::size_t n = p.n;
  std::vector<double> inv(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<long double> e(n, 0.0L);
    e[j] = 1.0L;
    e = substitute(L, n, std::move(e));
    for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = static_cast<double>(e[i]);
  }
  return inv;
}

double dense_log_det(const DenseProblem& p) {
  const auto L = cholesky(p);
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.n; ++i) s += 2.0L * std::log(L[i * p.n + i]);
  return static_cast<double>(s);
}

double relative_residual(const DenseProblem& p, const std::vector<double>& x) {
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < p.n; ++i) {
    long double r = p.b[i];
    for (std::size_t j = 0; j < p.n; ++j) r -= static_cast<long double>(p.at(i, j)) * x[j];
    num += r * r;
    den += static_cast<long double>(p.b[i]) * p.b[i];
  }
  return den > 0 ? static_cast<double>(std::sqrt(num / den)) : static_cast<double>(std::sqrt(num));
}

DenseProblem dirichlet_matrix(const LatticeBox& box, const std::function<double(const Edge&)>& a) {
  const int d = box.dim();
  std::vector<Coord> interior;
  for (const auto& x : box.sites()) {
    bool inside = true;
    for (int i = 0; i < d; ++i) inside = inside && x[i] > box.lo()[i] && x[i] < box.hi()[i];
    if (inside) interior.push_back(x);
  }
  auto find = [&](const Coord& x) -> long {
    auto it = std::lower_bound(interior.begin(), interior.end(), x);
    return it != interior.end() && *it == x ? it - interior.begin() : -1;
  };
  DenseProblem p = make_dense(interior.size());
  for (std::size_t r = 0; r < interior.size(); ++r) {
    const Coord x = interior[r];
    for (int i = 0; i < d; ++i)
      for (int sgn : {-1, 1}) {
        Coord y = x;
        y[i] += sgn;
        const Edge e = sgn > 0 ? Edge{x, i} : Edge{y, i};
        const double c = a(e);
        p.at(r, r) += c;
        const long col = find(y);
        if (col >= 0) p.at(r, static_cast<std::size_t>(col)) -= c;
      }
  }
  return p;
}

namespace {

using Weights = std::vector<std::vector<long double>>;

bool connected(const Weights& w) {
  const std::size_t n = w.size();
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < n; ++v)
      if (!seen[v] && w[u][v] > 0.0L) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == n;
}

long double tree_polynomial(const Weights& w) {
  const std::size_t n = w.size();
  if (n == 1) return 1.0L;
  if (!connected(w)) return 0.0L;
  // Branch on an edge at a vertex of least degree.
  std::size_t best = 0, best_deg = n + 1;
  for (std::size_t u = 0; u < n; ++u) {
    std::size_t deg = 0;
    for (std::size_t v = 0; v < n; ++v) deg += w[u][v] > 0.0L;
    if (deg < best_deg) {
      best_deg = deg;
      best = u;
    }
  }
  std::size_t other = 0;
  while (!(w[best][other] > 0.0L)) ++other;
  const long double we = w[best][other];

  Weights contracted;
  contracted.reserve(n - 1);
  const std::size_t keep = std::min(best, other), drop = std::max(best, other);
  for (std::size_t u = 0; u < n; ++u) {
    if (u == drop) continue;
    std::vector<long double> row;
    row.reserve(n - 1);
    for (std::size_t v = 0; v < n; ++v) {
      if (v == drop) continue;
      long double val = w[u][v];
      if (u == keep && v != keep) val += w[drop][v];
      if (v == keep && u != keep) val += w[u][drop];
      if (u == keep && v == keep) val = 0.0L;
      row.push_back(val);
    }
    contracted.push_back(std::move(row));
  }
  long double with = we * tree_polynomial(contracted);
  if (best_deg == 1) return with;
  Weights deleted = w;
  deleted[best][other] = deleted[other][best] = 0.0L;
  // Two-term compensated sum.
  const long double without = tree_polynomial(deleted);
  const long double s = with + without;
  const long double bp = s - with;
  const long double err = (with - (s - bp)) + (without - bp);
  return s + err;
}

}  // namespace

long double enumerate_wired_spanning_trees(const LatticeBox& box, const TauField& tau) {
  const int d = box.dim();
  std::vector<Coord> interior;
  for (const auto& x : box.sites()) {
    bool inside = true;
    for (int i = 0; i < d; ++i) inside = inside && x[i] > box.lo()[i] && x[i] < box.hi()[i];
    if (inside) interior.push_back(x);
  }
  const std::size_t n = interior.size() + 1;
  if (n > kTreeVertexCap) throw DomainError("spanning-tree oracle: graph above vertex cap");
  const std::size_t wired = interior.size();
  auto id = [&](const Coord& x) {
    auto it = std::lower_bound(interior.begin(), interior.end(), x);
    return it != interior.end() && *it == x ? static_cast<std::size_t>(it - interior.begin()) : wired;
  };
  Weights w(n, std::vector<long double>(n, 0.0L));
  for (const auto& x : box.sites())
    for (int i = 0; i < d; ++i) {
      Coord y = x;
      ++y[i];
      if (y[i] > box.hi()[i]) continue;
      const std::size_t u = id(x), v = id(y);
      if (u == v) continue;
      const long double c = std::exp(static_cast<long double>(tau(Edge{x, i})));
      w[u][v] += c;
      w[v][u] += c;
    }
  return tree_polynomial(w);
}

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7], g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double s = f(c - x) + f(c + x);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                           double rel_tol) {
  std::priority_queue<Segment> heap;
  heap.push(gk15(f, a, b));
  double value = heap.top().value, error = heap.top().error;
  for (int it = 0; it < 20000; ++it) {
    if (error <= std::max(abs_tol, rel_tol * std::abs(value))) break;
    const Segment s = heap.top();
    heap.pop();
    const double m = 0.5 * (s.a + s.b);
    const Segment l = gk15(f, s.a, m), r = gk15(f, m, s.b);
    value += l.value + r.value - s.value;
    error += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
  }
  // Re-sum to remove drift from the running updates.
  value = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return {value, error};
}

namespace {

double tau_density(double z, double t) { return std::exp(-z * std::exp(t) - std::exp(-t) - 0.5 * t); }

std::pair<double, double> tau_range(double z) {
  const double lo = -8.0;
  double hi = 100.0;
  if (z > 0.0) hi = std::clamp(std::log(800.0 / z), 5.0, 100.0);
  return {lo, hi};
}

}  // namespace

QuadratureResult quadrature_magic_identity(double z) {
  if (z < 0.0) throw DomainError("magic identity needs z >= 0");
  const auto [lo, hi] = tau_range(z);
  auto q = integrate([z](double t) { return tau_density(z, t); }, lo, hi, 1e-16, 1e-14);
  // Right tail bounded by ∫_hi^∞ e^{−t/2} dt.
  const double tail = 2.0 * std::exp(-0.5 * hi) * std::exp(-z * std::exp(hi));
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  return {q.value * inv_sqrt_pi, (q.error + tail) * inv_sqrt_pi};
}

std::vector<double> tau_cdf_sorted(double z, const std::vector<double>& pts) {
  const auto [lo, hi] = tau_range(z);
  auto rho = [z](double t) { return tau_density(z, t); };
  const double total = integrate(rho, lo, hi, 1e-16, 1e-14).value;
  std::vector<double> out;
  out.reserve(pts.size());
  double acc = 0.0, prev = lo;
  for (double x : pts) {
    const double xc = std::clamp(x, lo, hi);
    if (xc > prev) {
      acc += integrate(rho, prev, xc, 1e-17, 1e-12).value;
      prev = xc;
    }
    out.push_back(std::min(1.0, acc / total));
  }
  return out;
}

double tau_expectation(double z, const std::function<double(double)>& w) {
  const auto [lo, hi] = tau_range(z);
  auto rho = [z](double t) { return tau_density(z, t); };
  const double total = integrate(rho, lo, hi, 1e-16, 1e-14).value;
  const double num = integrate([&](double t) { return w(t) * rho(t); }, lo, hi, 1e-16, 1e-13).value;
  return num / total;
}

PiecewiseExponential::PiecewiseExponential(std::vector<double> breakpoints, std::vector<double> slopes) {
  if (breakpoints.empty() || slopes.size() != breakpoints.size() + 1)
    throw DomainError("piecewise exponential: need one more slope than breakpoints");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end()))
    throw DomainError("piecewise exponential: breakpoints must be sorted");
  if (!(slopes.front() > 0.0) || !(slopes.back() < 0.0))
    throw DomainError("piecewise exponential: density is not integrable");
  bp_.assign(breakpoints.begin(), breakpoints.end());
  slope_.assign(slopes.begin(), slopes.end());
  const std::size_t m = bp_.size();
  level_.assign(m + 1, 0.0L);
  for (std::size_t k = 1; k < m; ++k) level_[k + 1] = level_[k] + slope_[k] * (bp_[k] - bp_[k - 1]);
  mass_.assign(m + 1, 0.0L);
  mass_[0] = 1.0L / slope_[0];
  for (std::size_t k = 1; k < m; ++k) mass_[k] = piece_mass(k, bp_[k - 1], bp_[k]);
  mass_[m] = -std::exp(level_[m]) / slope_[m];
  total_ = 0.0L;
  for (auto v : mass_) total_ += v;
}

long double PiecewiseExponential::log_density_at(std::size_t k, long double x) const {
  if (k == 0) return slope_[0] * (x - bp_[0]);
  return level_[k] + slope_[k] * (x - bp_[k - 1]);
}

long double PiecewiseExponential::piece_mass(std::size_t k, long double from, long double to) const {
  const long double s = slope_[k];
  const long double e0 = std::exp(log_density_at(k, from));
  if (s == 0.0L) return e0 * (to - from);
  return e0 * std::expm1(s * (to - from)) / s;
}

double PiecewiseExponential::cdf(double xd) const {
  const long double x = xd;
  const std::size_t m = bp_.size();
  if (x <= bp_[0]) return static_cast<double>(std::exp(slope_[0] * (x - bp_[0])) / slope_[0] / total_);
  long double acc = mass_[0];
  for (std::size_t k = 1; k < m; ++k) {
    if (x <= bp_[k]) return static_cast<double>((acc + piece_mass(k, bp_[k - 1], x)) / total_);
    acc += mass_[k];
  }
  const long double tail = std::exp(log_density_at(m, x)) / (-slope_[m]);
  return static_cast<double>((total_ - tail) / total_);
}

double PiecewiseExponential::cdf_at_infinity() const {
  long double acc = 0.0L;
  for (auto v : mass_) acc += v;
  return static_cast<double>(acc / total_);
}

long double PiecewiseExponential::piece_moment(std::size_t k, int order) const {
  // ∫ x^j e^{level + s(x − x0)} over the piece via the antiderivative.
  const std::size_t m = bp_.size();
  const long double s = slope_[k];
  const long double x0 = k == 0 ? bp_[0] : bp_[k - 1];
  const long double lv = k == 0 ? 0.0L : level_[k];
  auto anti = [&](long double x) -> long double {
    const long double e = std::exp(lv + s * (x - x0));
    if (order == 1) return e * (x / s - 1.0L / (s * s));
    return e * (x * x / s - 2.0L * x / (s * s) + 2.0L / (s * s * s));
  };
  auto poly = [&](long double x) -> long double {
    const long double e = std::exp(lv);
    return order == 1 ? e * x * x / 2.0L : e * x * x * x / 3.0L;
  };
  if (k == 0) return anti(bp_[0]);
  if (k == m) return -anti(bp_[m - 1]);
  if (s == 0.0L) return poly(bp_[k]) - poly(bp_[k - 1]);
  return anti(bp_[k]) - anti(bp_[k - 1]);
}

double PiecewiseExponential::mean() const {
  long double s = 0.0L;
  for (std::size_t k = 0; k <= bp_.size(); ++k) s += piece_moment(k, 1);
  return static_cast<double>(s / total_);
}

double PiecewiseExponential::variance() const {
  long double s1 = 0.0L, s2 = 0.0L;
  for (std::size_t k = 0; k <= bp_.size(); ++k) {
    s1 += piece_moment(k, 1);
    s2 += piece_moment(k, 2);
  }
  const long double mu = s1 / total_;
  return static_cast<double>(s2 / total_ - mu * mu);
}

PiecewiseExponential piecewise_exponential_cdf(const std::vector<double>& breakpoints,
                                               const std::vector<double>& slopes) {
  return PiecewiseExponential(breakpoints, slopes);
}

PiecewiseExponential heatbath_conditional(std::vector<double> neighbours, double beta) {
  std::sort(neighbours.begin(), neighbours.end());
  const auto m = static_cast<double>(neighbours.size());
  std::vector<double> slopes;
  for (std::size_t k = 0; k <= neighbours.size(); ++k) slopes.push_back(beta * (m - 2.0 * static_cast<double>(k)));
  return PiecewiseExponential(std::move(neighbours), std::move(slopes));
}

}  // namespace soslab::oracle
