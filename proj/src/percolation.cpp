#include "soslab/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "soslab/errors.hpp"

namespace soslab {

namespace {

struct UnionFind {
  std::vector<std::size_t> parent, rank;
  explicit UnionFind(std::size_t n) : parent(n), rank(n, 0) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a), b = find(b);
    if (a == b) return;
    if (rank[a] < rank[b]) std::swap(a, b);
    parent[b] = a;
    if (rank[a] == rank[b]) ++rank[a];
  }
};

void need_samples(std::size_t n, const char* what) {
  if (n < 100)
    throw StatisticsError(std::string(what) + ": needs at least 100 samples, got " + std::to_string(n));
}

}  // namespace

int ClusterDecomposition::cluster_of(const Coord& x) const {
  const BoxIndexer ix(box.dim(), box.lo(), box.hi());
  if (!ix.contains(x)) return -1;
  return site_cluster[ix.index(x)];
}

std::size_t ClusterDecomposition::bad_edge_count() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.edges.size();
  return n;
}

ClusterDecomposition decompose_clusters(const TauField& tau, double t) {
  if (!(t > 0.0)) throw DomainError("decompose_clusters: threshold must be positive");
  const auto& box = tau.box();
  const int d = box.dim();
  const BoxIndexer ix(d, box.lo(), box.hi());
  UnionFind uf(ix.size());
  std::vector<Edge> bad;
  for (const auto& e : enumerate_edges(box)) {
    if (std::abs(tau.tau(e)) > t) {
      bad.push_back(e);
      uf.unite(ix.index(e.base), ix.index(e.head()));
    }
  }

  ClusterDecomposition out;
  out.box = box;
  out.threshold = t;
  out.site_cluster.assign(ix.size(), -1);

  std::vector<int> root_cluster(ix.size(), -1);
  std::vector<std::vector<Edge>> edges;
  for (const auto& e : bad) {
    const auto r = uf.find(ix.index(e.base));
    if (root_cluster[r] < 0) {
      root_cluster[r] = static_cast<int>(edges.size());
      edges.emplace_back();
    }
    edges[static_cast<std::size_t>(root_cluster[r])].push_back(e);
  }

  for (auto& es : edges) {
    Cluster c;
    std::sort(es.begin(), es.end());
    for (const auto& e : es) {
      c.vertices.push_back(e.base);
      c.vertices.push_back(e.head());
    }
    std::sort(c.vertices.begin(), c.vertices.end());
    c.vertices.erase(std::unique(c.vertices.begin(), c.vertices.end()), c.vertices.end());
    c.representative = c.vertices.front();
    c.edges = std::move(es);
    c.diameter = graph_diameter(c.vertices, c.edges, d);
    out.clusters.push_back(std::move(c));
  }
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.representative < b.representative; });
  for (std::size_t k = 0; k < out.clusters.size(); ++k)
    for (const auto& x : out.clusters[k].vertices) out.site_cluster[ix.index(x)] = static_cast<int>(k);

  for (auto& c : out.clusters) {
    for (const auto& x : c.vertices) {
      for (int i = 0; i < d; ++i) {
        for (int s : {-1, 1}) {
          Coord y = x;
          y[i] += s;
          if (ix.contains(y) && out.site_cluster[ix.index(y)] < 0) c.boundary.push_back(y);
        }
      }
    }
    std::sort(c.boundary.begin(), c.boundary.end());
    c.boundary.erase(std::unique(c.boundary.begin(), c.boundary.end()), c.boundary.end());
  }
  return out;
}

GoodCubeReport classify_good_cube(const TauField& tau, const ClusterDecomposition& clusters, const LatticeBox& cube,
                                  const std::map<int, double>& reference) {
  const auto big = cube.enlarged();
  if (!clusters.box.contains_box(big)) throw DomainError("classify_good_cube: enlarged cube leaves the field box");
  const int d = cube.dim();
  GoodCubeReport r;
  r.cube = cube.describe();
  r.diam_bound = cube.volume() / 100.0;
  std::vector<char> seen(clusters.clusters.size(), 0);
  for (const auto& x : big.owned_sites()) {
    const int k = clusters.cluster_of(x);
    if (k < 0 || seen[static_cast<std::size_t>(k)]) continue;
    seen[static_cast<std::size_t>(k)] = 1;
    r.diam_moment += std::pow(static_cast<double>(clusters.clusters[static_cast<std::size_t>(k)].diameter), d + 2);
  }
  r.rare_high_conductance = r.diam_moment <= r.diam_bound;

  const auto edges = enumerate_edges(cube);
  for (const auto& [p, ref] : reference) {
    if (p < 1 || !(ref > 0.0)) throw DomainError("classify_good_cube: reference moments need p >= 1 and a positive value");
    double m = 0.0;
    for (const auto& e : edges) m += std::exp(-p * tau.tau(e));
    m /= static_cast<double>(edges.size());
    const double ratio = std::pow(m, -1.0 / p) / (0.5 * std::pow(ref, -1.0 / p));
    r.inverse_moment_ratios[p] = ratio;
    if (ratio < 1.0) r.inverse_moments_ok = false;
  }
  r.good = r.rare_high_conductance && r.inverse_moments_ok;
  if (!r.rare_high_conductance)
    r.failing_condition = "rarity of high conductances";
  else if (!r.inverse_moments_ok)
    r.failing_condition = "inverse moments";
  return r;
}

GoodCubeReport classify_good_cube(const TauField& tau, const LatticeBox& cube, double t,
                                  const std::map<int, double>& reference) {
  return classify_good_cube(tau, decompose_clusters(tau, t), cube, reference);
}

GoodFraction good_cube_fraction(const TauField& tau, const ClusterDecomposition& clusters, int n,
                                const std::map<int, double>& reference) {
  const auto& box = tau.box();
  const int d = box.dim();
  const std::int64_t s = pow3(n);
  GoodFraction f;
  f.scale = n;
  std::array<std::vector<std::int64_t>, kMaxDim> starts;
  for (int i = 0; i < d; ++i)
    for (std::int64_t c = box.lo()[i] + s; c + 2 * s <= box.hi()[i]; c += s) starts[i].push_back(c);
  for (int i = 0; i < d; ++i)
    if (starts[i].empty()) return f;
  std::array<std::size_t, kMaxDim> k{};
  while (true) {
    Coord corner{};
    for (int i = 0; i < d; ++i) corner[i] = starts[i][k[i]];
    const auto cube = LatticeBox::half_open_triadic(d, n, corner);
    ++f.cubes;
    if (classify_good_cube(tau, clusters, cube, reference).good) ++f.good;
    int i = d - 1;
    while (i >= 0 && ++k[i] == starts[i].size()) k[i--] = 0;
    if (i < 0) break;
  }
  return f;
}

std::vector<EdgeSet> straight_path_family(const LatticeBox& box, int max_length, std::int64_t margin) {
  std::vector<EdgeSet> out;
  const int d = box.dim();
  for (int len = 1; len <= max_length; ++len) {
    for (const auto& x : box.sites()) {
      bool inside = true;
      for (int i = 0; i < d; ++i) {
        const std::int64_t top = i == 0 ? x[i] + len : x[i];
        if (x[i] - margin < box.lo()[i] || top + margin > box.hi()[i]) inside = false;
      }
      if (!inside) continue;
      EdgeSet path;
      for (int j = 0; j < len; ++j) {
        Coord b = x;
        b[0] += j;
        path.push_back(Edge{b, 0});
      }
      out.push_back(std::move(path));
    }
  }
  return out;
}

namespace {

std::vector<TailEntry> tail_entries(std::span<const TauField> samples, double t, std::span<const EdgeSet> paths,
                                    double sign) {
  std::map<std::size_t, TailEntry> by_size;
  for (const auto& path : paths) {
    auto& entry = by_size[path.size()];
    entry.threshold = t;
    entry.size = path.size();
    for (const auto& tau : samples) {
      bool all = true;
      for (const auto& e : path) all = all && sign * tau.tau(e) >= t;
      entry.hits += all ? 1 : 0;
      ++entry.trials;
    }
  }
  std::vector<TailEntry> out;
  for (auto& [size, e] : by_size) {
    if (e.hits == 0) {
      e.bound_only = true;
      // The sets of one size are highly correlated, so the bound uses the sample count.
      e.probability = stats::rule_of_three(samples.size());
    } else {
      e.probability = static_cast<double>(e.hits) / static_cast<double>(e.trials);
    }
    out.push_back(e);
  }
  return out;
}

TailFit fit_tail(std::span<const TailEntry> entries, double t) {
  TailFit fit;
  fit.threshold = t;
  std::vector<double> x, y;
  for (const auto& e : entries) {
    if (e.threshold != t || e.bound_only) continue;
    x.push_back(static_cast<double>(e.size));
    y.push_back(std::log(e.probability));
  }
  fit.points = x.size();
  if (x.size() >= 3) {
    const auto lf = stats::linear_fit(x, y);
    fit.alpha = -lf.slope;
    fit.alpha_se = lf.slope_se;
  } else {
    fit.alpha = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

}  // namespace

TailReport tail_statistics(std::span<const TauField> samples, std::span<const double> thresholds,
                           std::span<const EdgeSet> paths) {
  need_samples(samples.size(), "tail_statistics");
  if (thresholds.empty() || paths.empty()) throw DomainError("tail_statistics: empty threshold grid or path family");
  TailReport r;
  for (double t : thresholds) {
    auto hi = tail_entries(samples, t, paths, 1.0);
    auto lo = tail_entries(samples, t, paths, -1.0);
    r.high_fit.push_back(fit_tail(hi, t));
    r.low_fit.push_back(fit_tail(lo, t));
    r.high.insert(r.high.end(), hi.begin(), hi.end());
    r.low.insert(r.low.end(), lo.begin(), lo.end());
  }
  std::size_t bad = 0, total = 0;
  for (const auto& tau : samples) {
    for (const auto& path : paths) {
      if (path.size() != 1) continue;
      bad += std::abs(tau.tau(path[0])) > thresholds[0] ? 1 : 0;
      ++total;
    }
  }
  r.single_edge_bad = total ? static_cast<double>(bad) / static_cast<double>(total) : 0.0;
  return r;
}

std::vector<MomentEstimate> estimate_inverse_moments(std::span<const double> tau_samples, std::span<const int> ks) {
  need_samples(tau_samples.size(), "estimate_inverse_moments");
  std::vector<MomentEstimate> out;
  const std::size_t n = tau_samples.size();
  for (int k : ks) {
    if (k == 0) throw DomainError("estimate_inverse_moments: k must be non-zero");
    std::vector<double> v;
    v.reserve(n);
    for (double t : tau_samples) v.push_back(std::exp(-k * t));
    MomentEstimate m;
    m.k = k;
    const std::span<const double> all(v);
    m.estimate = stats::batch_mean_estimate(all, 20);
    m.half_estimate = stats::batch_mean_estimate(all.first(n / 2), 20);
    const double spread = std::hypot(m.estimate.se, m.half_estimate.se);
    m.stable = std::abs(m.estimate.value - m.half_estimate.value) <= 3.0 * spread;
    m.tail_index = stats::hill_estimator(v, std::max<std::size_t>(10, n / 20));
    m.verdict = m.stable && m.tail_index > 2.0 ? "finite" : "divergence suspected";
    out.push_back(m);
  }
  return out;
}

LargeScalePoincare large_scale_poincare_check(const TauField& tau, const VertexFunction& u, const LatticeBox& cube) {
  if (!tau.box().contains_box(cube.enlarged()))
    throw DomainError("large_scale_poincare_check: enlarged cube leaves the field box");
  LargeScalePoincare r;
  const auto sites = cube.owned_sites();
  double mean = 0.0;
  for (const auto& x : sites) mean += u(x);
  mean /= static_cast<double>(sites.size());
  for (const auto& x : sites) r.lhs += (u(x) - mean) * (u(x) - mean);
  r.lhs /= static_cast<double>(sites.size());
  // Owned sites of a triadic cube form a full box: diameter d(side − 1).
  double diam = 0.0;
  for (int i = 0; i < cube.dim(); ++i) {
    std::int64_t lo = sites.front()[i], hi = lo;
    for (const auto& x : sites) lo = std::min(lo, x[i]), hi = std::max(hi, x[i]);
    diam += static_cast<double>(hi - lo);
  }
  double energy = 0.0;
  for (const auto& e : enumerate_edges(cube)) {
    const double g = gradient(u, e);
    energy += tau.a(e) * g * g;
  }
  r.rhs = diam * diam * energy / cube.volume();
  if (r.lhs == 0.0)
    r.ratio = 0.0;
  else if (r.rhs == 0.0)
    r.ratio = std::numeric_limits<double>::infinity();
  else
    r.ratio = r.lhs / r.rhs;
  return r;
}

}  // namespace soslab
