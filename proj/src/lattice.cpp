#include "soslab/lattice.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "soslab/errors.hpp"

namespace soslab {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) throw DomainError("dimension must be 1, 2 or 3");
}

struct CoordHash {
  std::size_t operator()(const Coord& c) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto v : c) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

std::string coord_str(const Coord& c, int dim) {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim; ++i) os << (i ? "," : "") << c[i];
  os << ')';
  return os.str();
}

}  // namespace

std::int64_t pow3(int n) {
  if (n < 0 || n > 38) throw DomainError("triadic exponent out of range");
  std::int64_t r = 1;
  for (int i = 0; i < n; ++i) r *= 3;
  return r;
}

Coord unit_vector(int axis) {
  Coord c{};
  c[axis] = 1;
  return c;
}

Coord operator+(const Coord& a, const Coord& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

Coord operator-(const Coord& a, const Coord& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

std::string to_string(CubeConvention c) {
  switch (c) {
    case CubeConvention::closed_box: return "closed_box";
    case CubeConvention::centered_triadic: return "centered_triadic";
    case CubeConvention::half_open_triadic: return "half_open_triadic";
    case CubeConvention::vertex_set: return "vertex_set";
  }
  return "unknown";
}

Coord Edge::head() const {
  Coord h = base;
  ++h[axis];
  return h;
}

BoxIndexer::BoxIndexer(int dim, const Coord& lo, const Coord& hi) : dim_(dim), lo_(lo), hi_(hi) {
  check_dim(dim);
  size_ = 1;
  for (int i = dim - 1; i >= 0; --i) {
    if (hi[i] < lo[i]) {
      size_ = 0;
      break;
    }
    stride_[i] = size_;
    size_ *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  }
}

bool BoxIndexer::contains(const Coord& x) const {
  for (int i = 0; i < dim_; ++i)
    if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
  return true;
}

std::size_t BoxIndexer::index(const Coord& x) const {
  std::size_t k = 0;
  for (int i = 0; i < dim_; ++i) k += static_cast<std::size_t>(x[i] - lo_[i]) * stride_[i];
  return k;
}

Coord BoxIndexer::coord(std::size_t index) const {
  Coord c{};
  for (int i = 0; i < dim_; ++i) {
    c[i] = lo_[i] + static_cast<std::int64_t>(index / stride_[i]);
    index %= stride_[i];
  }
  return c;
}

LatticeBox LatticeBox::cube(int dim, std::int64_t half_side) {
  if (half_side < 0) throw DomainError("negative box half-side");
  Coord lo{}, hi{};
  for (int i = 0; i < dim; ++i) {
    lo[i] = -half_side;
    hi[i] = half_side;
  }
  return box(dim, lo, hi);
}

LatticeBox LatticeBox::box(int dim, const Coord& lo, const Coord& hi) {
  check_dim(dim);
  LatticeBox b;
  b.dim_ = dim;
  b.convention_ = CubeConvention::closed_box;
  for (int i = 0; i < dim; ++i) {
    b.lo_[i] = lo[i];
    b.hi_[i] = hi[i];
  }
  return b;
}

LatticeBox LatticeBox::centered_triadic(int dim, int n, const Coord& center) {
  check_dim(dim);
  const std::int64_t r = pow3(n);
  LatticeBox b;
  b.dim_ = dim;
  b.convention_ = CubeConvention::centered_triadic;
  b.side_log3_ = n;
  for (int i = 0; i < dim; ++i) {
    b.lo_[i] = center[i] - r;
    b.hi_[i] = center[i] + r;
  }
  return b;
}

LatticeBox LatticeBox::half_open_triadic(int dim, int n, const Coord& corner) {
  check_dim(dim);
  const std::int64_t s = pow3(n);
  LatticeBox b;
  b.dim_ = dim;
  b.convention_ = CubeConvention::half_open_triadic;
  b.side_log3_ = n;
  for (int i = 0; i < dim; ++i) {
    b.lo_[i] = corner[i];
    b.hi_[i] = corner[i] + s;
  }
  return b;
}

LatticeBox LatticeBox::vertex_set(int dim, std::vector<Coord> vertices) {
  check_dim(dim);
  for (auto& v : vertices)
    for (int i = dim; i < kMaxDim; ++i) v[i] = 0;
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  LatticeBox b;
  b.dim_ = dim;
  b.convention_ = CubeConvention::vertex_set;
  if (!vertices.empty()) {
    b.lo_ = vertices.front();
    b.hi_ = vertices.front();
    for (const auto& v : vertices)
      for (int i = 0; i < dim; ++i) {
        b.lo_[i] = std::min(b.lo_[i], v[i]);
        b.hi_[i] = std::max(b.hi_[i], v[i]);
      }
  } else {
    b.hi_[0] = -1;
  }
  b.vertices_ = std::move(vertices);
  return b;
}

bool LatticeBox::empty() const {
  if (dim_ == 0) return true;
  if (convention_ == CubeConvention::vertex_set) return vertices_.empty();
  for (int i = 0; i < dim_; ++i)
    if (hi_[i] < lo_[i]) return true;
  return false;
}

std::size_t LatticeBox::site_count() const {
  if (convention_ == CubeConvention::vertex_set) return vertices_.size();
  if (empty()) return 0;
  return BoxIndexer(dim_, lo_, hi_).size();
}

double LatticeBox::volume() const {
  if (convention_ == CubeConvention::half_open_triadic) {
    double v = 1;
    for (int i = 0; i < dim_; ++i) v *= static_cast<double>(hi_[i] - lo_[i]);
    return v;
  }
  return static_cast<double>(site_count());
}

bool LatticeBox::contains(const Coord& x) const {
  if (convention_ == CubeConvention::vertex_set) {
    Coord y = x;
    for (int i = dim_; i < kMaxDim; ++i) y[i] = 0;
    return std::binary_search(vertices_.begin(), vertices_.end(), y);
  }
  for (int i = 0; i < dim_; ++i)
    if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
  return true;
}

bool LatticeBox::owns(const Coord& x) const {
  if (convention_ != CubeConvention::half_open_triadic) return contains(x);
  for (int i = 0; i < dim_; ++i)
    if (x[i] < lo_[i] || x[i] >= hi_[i]) return false;
  return true;
}

bool LatticeBox::is_boundary(const Coord& x) const {
  if (!contains(x)) return false;
  if (convention_ == CubeConvention::vertex_set) {
    for (int i = 0; i < dim_; ++i) {
      Coord y = x;
      ++y[i];
      if (!contains(y)) return true;
      y[i] -= 2;
      if (!contains(y)) return true;
    }
    return false;
  }
  for (int i = 0; i < dim_; ++i)
    if (x[i] == lo_[i] || x[i] == hi_[i]) return true;
  return false;
}

bool LatticeBox::has_edge(const Edge& e) const {
  if (e.axis < 0 || e.axis >= dim_) return false;
  if (convention_ == CubeConvention::half_open_triadic) return owns(e.base);
  return contains(e.base) && contains(e.head());
}

std::vector<Coord> LatticeBox::sites() const {
  if (convention_ == CubeConvention::vertex_set) return vertices_;
  std::vector<Coord> out;
  if (empty()) return out;
  BoxIndexer ix(dim_, lo_, hi_);
  out.reserve(ix.size());
  for (std::size_t k = 0; k < ix.size(); ++k) out.push_back(ix.coord(k));
  return out;
}

std::vector<Coord> LatticeBox::owned_sites() const {
  if (convention_ != CubeConvention::half_open_triadic) return sites();
  std::vector<Coord> out;
  Coord hi = hi_;
  for (int i = 0; i < dim_; ++i) --hi[i];
  BoxIndexer ix(dim_, lo_, hi);
  out.reserve(ix.size());
  for (std::size_t k = 0; k < ix.size(); ++k) out.push_back(ix.coord(k));
  return out;
}

std::vector<Coord> LatticeBox::boundary_sites() const {
  std::vector<Coord> out;
  for (const auto& x : sites())
    if (is_boundary(x)) out.push_back(x);
  return out;
}

std::vector<Coord> LatticeBox::interior_sites() const {
  std::vector<Coord> out;
  for (const auto& x : sites())
    if (!is_boundary(x)) out.push_back(x);
  return out;
}

Coord LatticeBox::center() const {
  Coord c{};
  for (int i = 0; i < dim_; ++i) {
    if (convention_ == CubeConvention::half_open_triadic)
      c[i] = lo_[i] + (hi_[i] - lo_[i] - 1) / 2;
    else
      c[i] = lo_[i] + (hi_[i] - lo_[i]) / 2;
  }
  return c;
}

LatticeBox LatticeBox::enlarged() const {
  if (!side_log3_) throw DomainError("enlarged() needs a triadic cube");
  const int n = *side_log3_;
  if (convention_ == CubeConvention::centered_triadic) return centered_triadic(dim_, n + 1, center());
  Coord corner = lo_;
  for (int i = 0; i < dim_; ++i) corner[i] -= pow3(n);
  return half_open_triadic(dim_, n + 1, corner);
}

bool LatticeBox::contains_box(const LatticeBox& inner) const {
  if (inner.dim_ != dim_) return false;
  if (inner.convention_ == CubeConvention::vertex_set || convention_ == CubeConvention::vertex_set) {
    for (const auto& x : inner.sites())
      if (!contains(x)) return false;
    return true;
  }
  for (int i = 0; i < dim_; ++i)
    if (inner.lo_[i] < lo_[i] || inner.hi_[i] > hi_[i]) return false;
  return true;
}

std::string LatticeBox::describe() const {
  std::ostringstream os;
  os << to_string(convention_) << ' ';
  switch (convention_) {
    case CubeConvention::closed_box:
      os << coord_str(lo_, dim_) << ".." << coord_str(hi_, dim_);
      break;
    case CubeConvention::centered_triadic:
      os << "n=" << *side_log3_ << " centre " << coord_str(center(), dim_);
      break;
    case CubeConvention::half_open_triadic:
      os << "n=" << *side_log3_ << " corner " << coord_str(lo_, dim_) << " centre "
         << coord_str(center(), dim_);
      break;
    case CubeConvention::vertex_set:
      os << vertices_.size() << " vertices";
      break;
  }
  return os.str();
}

std::vector<Edge> enumerate_edges(const LatticeBox& box) {
  if (box.empty()) throw DomainError("enumerate_edges: empty box");
  std::vector<Edge> out;
  const int d = box.dim();
  const auto verts = box.convention() == CubeConvention::half_open_triadic ? box.owned_sites() : box.sites();
  out.reserve(verts.size() * static_cast<std::size_t>(d));
  for (const auto& x : verts)
    for (int i = 0; i < d; ++i) {
      Edge e{x, i};
      if (box.has_edge(e)) out.push_back(e);
    }
  return out;
}

std::vector<LatticeBox> triadic_children(const LatticeBox& cube) {
  const auto n = cube.side_log3();
  if (!n) throw DomainError("triadic_children: cube is not triadic");
  if (*n == 0) throw DomainError("triadic_children: scale 0 has no children");
  const int d = cube.dim();
  const std::int64_t s = pow3(*n - 1);
  std::vector<LatticeBox> out;
  Coord zero{}, two{};
  for (int i = 0; i < d; ++i) two[i] = 2;
  BoxIndexer offsets(d, zero, two);
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const Coord off = offsets.coord(k);
    Coord c{};
    if (cube.convention() == CubeConvention::half_open_triadic) {
      for (int i = 0; i < d; ++i) c[i] = cube.lo()[i] + off[i] * s;
      out.push_back(LatticeBox::half_open_triadic(d, *n - 1, c));
    } else {
      const Coord z = cube.center();
      for (int i = 0; i < d; ++i) c[i] = z[i] + (off[i] - 1) * 2 * s;
      out.push_back(LatticeBox::centered_triadic(d, *n - 1, c));
    }
  }
  return out;
}

std::vector<LatticeBox> enumerate_simplexes(int n, int dim, const Coord& corner) {
  check_dim(dim);
  const auto cube = LatticeBox::half_open_triadic(dim, n, corner);
  std::vector<int> perm(dim);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::vector<Coord>> members(perms.size());
  for (const auto& x : cube.owned_sites()) {
    std::vector<int> order(dim);
    std::iota(order.begin(), order.end(), 0);
    // A stable sort by coordinate yields the lexicographically smallest
    // permutation among those ordering x ascending.
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return x[a] - corner[a] < x[b] - corner[b]; });
    const auto it = std::find(perms.begin(), perms.end(), order);
    members[static_cast<std::size_t>(it - perms.begin())].push_back(x);
  }
  std::vector<LatticeBox> out;
  for (auto& m : members) out.push_back(LatticeBox::vertex_set(dim, std::move(m)));
  return out;
}

std::int64_t graph_diameter(std::span<const Coord> vertices, int dim) {
  std::vector<Edge> edges;
  std::vector<Coord> sorted(vertices.begin(), vertices.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& x : sorted)
    for (int i = 0; i < dim; ++i) {
      Edge e{x, i};
      if (std::binary_search(sorted.begin(), sorted.end(), e.head())) edges.push_back(e);
    }
  return graph_diameter(vertices, edges, dim);
}

std::int64_t graph_diameter(std::span<const Coord> vertices, std::span<const Edge> edges, int dim) {
  check_dim(dim);
  if (vertices.empty()) throw DomainError("graph_diameter: empty vertex set");
  std::unordered_map<Coord, std::size_t, CoordHash> id;
  for (const auto& v : vertices) id.emplace(v, id.size());
  const std::size_t n = id.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    const auto a = id.find(e.base), b = id.find(e.head());
    if (a == id.end() || b == id.end()) throw DomainError("graph_diameter: edge endpoint outside vertex set");
    adj[a->second].push_back(b->second);
    adj[b->second].push_back(a->second);
  }
  std::int64_t diam = 0;
  std::vector<std::int64_t> dist(n);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    queue.assign(1, s);
    std::size_t seen = 1;
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (auto w : adj[u])
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          diam = std::max(diam, dist[w]);
          queue.push_back(w);
          ++seen;
        }
    }
    if (seen != n) throw DomainError("graph_diameter: vertex set is disconnected");
  }
  return diam;
}

}  // namespace soslab
