#pragma once

#include <cstdint>
#include <vector>

#include "soslab/lattice.hpp"

namespace soslab {

struct Cluster {
  Coord representative{};      // lexicographically smallest vertex
  std::vector<Coord> vertices;  // sorted
  std::vector<Edge> edges;      // sorted
  std::int64_t diameter = 0;    // graph diameter inside the cluster's edge set
  std::vector<Coord> boundary;  // neighbours inside the box that lie in no cluster, sorted
};

// Bad edges |τ_e| > t grouped into maximal connected components, ordered by
// representative.
struct ClusterDecomposition {
  LatticeBox box;
  double threshold = 0.0;
  std::vector<Cluster> clusters;
  // Per site of `box` (BoxIndexer order): cluster index or -1.
  std::vector<int> site_cluster;

  int cluster_of(const Coord& x) const;
  std::size_t bad_edge_count() const;
};

}  // namespace soslab
