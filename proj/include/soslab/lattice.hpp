#pragma once

// Geometry of finite lattice regions: boxes Q_L, triadic cubes in two
// conventions, adapted simplexes and arbitrary vertex sets.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace soslab {

inline constexpr int kMaxDim = 3;

// Unused trailing coordinates are kept at zero.
using Coord = std::array<std::int64_t, kMaxDim>;

std::int64_t pow3(int n);

Coord unit_vector(int axis);
Coord operator+(const Coord& a, const Coord& b);
Coord operator-(const Coord& a, const Coord& b);

enum class CubeConvention : std::uint8_t {
  // Closed box [lo, hi]^d; edges need both endpoints inside; |U| = #sites.
  closed_box = 0,
  // Closed triadic cube z + [-3^n, 3^n]^d; same edge rule as closed_box.
  centered_triadic = 1,
  // Half-open triadic cube z + [0, 3^n)^d. Functions live on the closure
  // z + [0, 3^n]^d, each owned vertex x carries the edges (x, x + e_i), and
  // |U| = 3^{nd}. Children partition both the owned vertices and the edges.
  half_open_triadic = 2,
  // Arbitrary vertex set; edges need both endpoints inside.
  vertex_set = 3,
};

std::string to_string(CubeConvention c);

struct Edge {
  Coord base{};
  int axis = 0;

  Coord head() const;
  auto operator<=>(const Edge&) const = default;
};

// Row-major (last coordinate fastest) indexing of the sites of a closed box,
// which coincides with lexicographic order of coordinates.
class BoxIndexer {
 public:
  BoxIndexer() = default;
  BoxIndexer(int dim, const Coord& lo, const Coord& hi);

  int dim() const { return dim_; }
  std::size_t size() const { return size_; }
  bool contains(const Coord& x) const;
  std::size_t index(const Coord& x) const;
  Coord coord(std::size_t index) const;
  std::int64_t extent(int axis) const { return hi_[axis] - lo_[axis] + 1; }
  std::size_t stride(int axis) const { return stride_[axis]; }

 private:
  int dim_ = 0;
  Coord lo_{};
  Coord hi_{};
  std::array<std::size_t, kMaxDim> stride_{};
  std::size_t size_ = 0;
};

class LatticeBox {
 public:
  LatticeBox() = default;

  // Q_L = [-L, L]^d.
  static LatticeBox cube(int dim, std::int64_t half_side);
  static LatticeBox box(int dim, const Coord& lo, const Coord& hi);
  static LatticeBox centered_triadic(int dim, int n, const Coord& center = {});
  static LatticeBox half_open_triadic(int dim, int n, const Coord& corner = {});
  static LatticeBox vertex_set(int dim, std::vector<Coord> vertices);

  int dim() const { return dim_; }
  CubeConvention convention() const { return convention_; }
  std::optional<int> side_log3() const { return side_log3_; }
  // Bounding box of the sites carrying function values (closed extents).
  const Coord& lo() const { return lo_; }
  const Coord& hi() const { return hi_; }

  bool empty() const;
  std::size_t site_count() const;
  // |U|: the normalising volume. Equals the number of owned vertices.
  double volume() const;

  bool contains(const Coord& x) const;
  bool owns(const Coord& x) const;
  bool is_boundary(const Coord& x) const;
  bool has_edge(const Edge& e) const;

  std::vector<Coord> sites() const;
  std::vector<Coord> owned_sites() const;
  std::vector<Coord> boundary_sites() const;
  std::vector<Coord> interior_sites() const;

  // Centre of a triadic cube (corner + (3^n - 1)/2 for
  // half-open cubes).
  Coord center() const;
  // Concentric triadic cube one scale up (same convention).
  LatticeBox enlarged() const;
  // True if every site of `inner` is a site of this box.
  bool contains_box(const LatticeBox& inner) const;

  const std::vector<Coord>& explicit_vertices() const { return vertices_; }

  // Human-readable label for reports, in centred coordinates for
  // triadic cubes.
  std::string describe() const;

 private:
  int dim_ = 0;
  CubeConvention convention_ = CubeConvention::closed_box;
  std::optional<int> side_log3_;
  Coord lo_{};
  Coord hi_{};
  std::vector<Coord> vertices_;  // sorted; vertex_set only
};

// Edges of the region in lexicographic order of (base vertex, axis).
std::vector<Edge> enumerate_edges(const LatticeBox& box);

// The 3^d triadic subcubes one scale down, in lexicographic order of their
// offsets. Half-open children partition the parent; centred children are
// closed cubes sharing faces.
std::vector<LatticeBox> triadic_children(const LatticeBox& cube);

// The d! simplexes {x : x_{pi(1)} <= ... <= x_{pi(d)}} tiling the owned
// vertices of the half-open cube corner + [0, 3^n)^d. Ties go to the
// lexicographically smallest permutation. Ordered lexicographically in pi.
std::vector<LatticeBox> enumerate_simplexes(int n, int dim, const Coord& corner = {});

// Graph diameter of a vertex set in the induced nearest-neighbour graph.
std::int64_t graph_diameter(std::span<const Coord> vertices, int dim);

// Graph diameter with adjacency restricted to the given edges (endpoints must
// be among `vertices`).
std::int64_t graph_diameter(std::span<const Coord> vertices, std::span<const Edge> edges, int dim);

}  // namespace soslab
