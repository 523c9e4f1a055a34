#pragma once

#include <cmath>
#include <vector>

#include "soslab/field.hpp"
#include "soslab/rng.hpp"

namespace testing {

inline soslab::TauField random_tau(const soslab::LatticeBox& box, std::uint64_t seed, double spread = 1.0) {
  soslab::TauField tau(box);
  soslab::RngStream rng(seed, soslab::StreamId{soslab::StreamKind::test, 0, 0, 0});
  for (const auto& e : soslab::enumerate_edges(box)) tau(e) = spread * (2.0 * rng.uniform() - 1.0);
  return tau;
}

inline soslab::VertexFunction random_vertex_function(const soslab::LatticeBox& box, std::uint64_t seed) {
  soslab::VertexFunction f(box);
  soslab::RngStream rng(seed, soslab::StreamId{soslab::StreamKind::test, 1, 0, 0});
  for (auto& v : f.values()) v = rng.normal();
  return f;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace testing
