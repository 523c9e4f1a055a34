#include <cmath>

#include "doctest.h"
#include "soslab/errors.hpp"
#include "soslab/field.hpp"
#include "support.hpp"

using namespace soslab;

TEST_CASE("gradient") {
  const auto box = LatticeBox::cube(2, 2);
  VertexFunction c(box, 3.5);
  for (const auto& e : enumerate_edges(box)) CHECK(gradient(c, e) == 0.0);
  const auto l = affine(box, {0.3, -1.2, 0.0});
  for (const auto& e : enumerate_edges(box)) CHECK(gradient(l, e) == doctest::Approx(e.axis == 0 ? 0.3 : -1.2));
  CHECK_THROWS_AS(gradient(l, Edge{Coord{2, 0}, 0}), DomainError);
  CHECK_THROWS_AS(gradient(l, Edge{Coord{0, 0}, 2}), DomainError);
}

TEST_CASE("plaquette circulation vanishes and gradients are antisymmetric") {
  const auto box = LatticeBox::cube(2, 1);
  const auto phi = testing::random_vertex_function(box, 4);
  for (std::int64_t x = -1; x < 1; ++x)
    for (std::int64_t y = -1; y < 1; ++y) {
      const Coord a{x, y}, b{x + 1, y}, c{x, y + 1};
      const double circ = gradient(phi, Edge{a, 0}) + gradient(phi, Edge{b, 1}) - gradient(phi, Edge{c, 0}) -
                          gradient(phi, Edge{a, 1});
      CHECK(std::abs(circ) < 1e-14);
    }
  for (const auto& e : enumerate_edges(box)) CHECK(phi(e.base) - phi(e.head()) == -gradient(phi, e));
}

TEST_CASE("divergence is the adjoint of the gradient") {
  const auto box = LatticeBox::cube(2, 4);
  const auto w0 = testing::random_vertex_function(box, 1);
  VertexFunction w(box);
  for (const auto& x : box.interior_sites()) w(x) = w0(x);
  EdgeFunction f(box);
  RngStream rng(2, 0);
  for (const auto& e : enumerate_edges(box)) f(e) = rng.normal();
  const auto div = divergence(f);
  double lhs = 0.0, rhs = 0.0;
  for (const auto& x : box.sites()) lhs += w(x) * div(x);
  for (const auto& e : enumerate_edges(box)) rhs -= f(e) * gradient(w, e);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("hat transform") {
  const auto box = LatticeBox::cube(2, 3);
  const auto l = affine(box, {1.0, 0.0, 0.0});
  ClusterDecomposition none;
  none.box = box;
  CHECK(hat_transform(l, none).values() == l.values());

  ClusterDecomposition one;
  one.box = box;
  Cluster c;
  c.vertices = {Coord{0, 0}};
  c.boundary = {Coord{-1, 0}, Coord{0, -1}, Coord{0, 1}, Coord{1, 0}};
  one.clusters.push_back(c);
  const auto h = hat_transform(l, one);
  CHECK(h(Coord{0, 0}) == 0.0);

  // Cluster {0, e1}: boundary mean of ℓ_{e1} over its six neighbours is 1/2.
  ClusterDecomposition two;
  two.box = box;
  Cluster d;
  d.vertices = {Coord{0, 0}, Coord{1, 0}};
  d.boundary = {Coord{-1, 0}, Coord{0, -1}, Coord{0, 1}, Coord{1, -1}, Coord{1, 1}, Coord{2, 0}};
  two.clusters.push_back(d);
  const auto h2 = hat_transform(l, two);
  CHECK(h2(Coord{0, 0}) == doctest::Approx(0.5));
  CHECK(h2(Coord{1, 0}) == doctest::Approx(0.5));
  CHECK(hat_transform(h2, two).values() == h2.values());
  for (const auto& x : box.sites())
    if (x != Coord{0, 0} && x != Coord{1, 0}) CHECK(h2(x) == l(x));

  // All boundary vertices outside the function's box.
  ClusterDecomposition degenerate;
  degenerate.box = box;
  Cluster e;
  e.vertices = {Coord{3, 3}};
  e.boundary = {Coord{4, 3}};
  degenerate.clusters.push_back(e);
  CHECK_THROWS_AS(hat_transform(l, degenerate), DegenerateClusterError);
}

namespace {

// Compactly supported stream function on the lattice.
double psi(double x, double y) {
  const double r2 = (x * x + y * y) / 25.0;
  return r2 < 1.0 ? std::pow(1.0 - r2, 4) : 0.0;
}

}  // namespace

TEST_CASE("F_R of constants and of affine fields against divergence-free f") {
  const auto box = LatticeBox::cube(2, 12);
  const auto bump = TestVectorField::bump(2, 6.0, {0.7, -0.4, 0.0});
  CHECK(evaluate_F_R(VertexFunction(box, 2.0), bump) == 0.0);

  // f_1 = ψ(x) − ψ(x − e2), f_2 = ψ(x − e1) − ψ(x) is divergence-free for the
  // backward-difference divergence, so Σ f·∇ℓ_p = −Σ ℓ_p div f = 0.
  TestVectorField f;
  f.dim = 2;
  f.R = 1.0;
  f.support_radius = 7.0;
  f.components.push_back([](const Point& y) { return psi(y[0], y[1]) - psi(y[0], y[1] - 1); });
  f.components.push_back([](const Point& y) { return psi(y[0] - 1, y[1]) - psi(y[0], y[1]); });
  const auto l = affine(box, {0.8, 1.9, 0.0});
  CHECK(std::abs(evaluate_F_R(l, f)) < 1e-12);

  TestVectorField wide = bump;
  wide.R = 12.5;
  CHECK_THROWS_AS(evaluate_F_R(l, wide), DomainError);
}

TEST_CASE("F_R matches a naive double loop on a 17x17 box") {
  const auto box = LatticeBox::cube(2, 8);
  const auto phi = testing::random_vertex_function(box, 9);
  const auto f = TestVectorField::bump(2, 5.0, {1.0, 0.5, 0.0});
  double naive = 0.0;
  for (int x = -8; x <= 8; ++x)
    for (int y = -8; y <= 8; ++y) {
      const double u = x / 5.0, v = y / 5.0;
      const double w = 1.0 - u * u - v * v;
      if (w <= 0.0) continue;
      const double b = w * w * w;
      naive += b * (phi(Coord{x + 1, y}) - phi(Coord{x, y})) + 0.5 * b * (phi(Coord{x, y + 1}) - phi(Coord{x, y}));
    }
  CHECK(evaluate_F_R(phi, f) == doctest::Approx(naive / 5.0).epsilon(1e-13));
}

TEST_CASE("F_R is linear in phi and in f") {
  const auto box = LatticeBox::cube(2, 8);
  const auto a = testing::random_vertex_function(box, 1), b = testing::random_vertex_function(box, 2);
  VertexFunction s(box);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = 2.0 * a[k] - 3.0 * b[k];
  const auto f = TestVectorField::bump(2, 4.0, {1.0, 0.0, 0.0});
  const auto g = TestVectorField::bump(2, 4.0, {0.0, 1.0, 0.0});
  const auto fg = TestVectorField::bump(2, 4.0, {1.0, 1.0, 0.0});
  CHECK(evaluate_F_R(s, f) == doctest::Approx(2.0 * evaluate_F_R(a, f) - 3.0 * evaluate_F_R(b, f)));
  CHECK(evaluate_F_R(a, fg) == doctest::Approx(evaluate_F_R(a, f) + evaluate_F_R(a, g)));
}

TEST_CASE("bump divergence agrees with finite differences") {
  const auto f = TestVectorField::bump(2, 1.0, {0.6, -1.3, 0.0});
  TestVectorField g = f;
  g.divergence = nullptr;
  for (const Point& x : {Point{0.1, 0.2, 0}, Point{-0.5, 0.3, 0}, Point{0.7, -0.6, 0}})
    CHECK(f.div(x) == doctest::Approx(g.div(x)).epsilon(1e-9));
}

TEST_CASE("inner product") {
  const auto box = LatticeBox::cube(2, 2);
  VertexFunction d(box);
  d(Coord{0, 0}) = 1.0;
  CHECK(inner_product_R(d, d, 1.0) == 1.0);
  const auto g = testing::random_vertex_function(box, 5), h = testing::random_vertex_function(box, 6);
  VertexFunction g2 = g;
  for (auto& v : g2.values()) v *= 2.5;
  CHECK(inner_product_R(g2, h, 3.0) == doctest::Approx(2.5 * inner_product_R(g, h, 3.0)));
  double naive = 0.0;
  for (const auto& x : box.sites()) naive += g(x) * h(x);
  CHECK(inner_product_R(g, h, 2.0) == doctest::Approx(naive / 4.0));
  CHECK_THROWS_AS(inner_product_R(g, VertexFunction(LatticeBox::cube(2, 3)), 1.0), DomainError);
}
