#include <cmath>

#include "doctest.h"
#include "soslab/coarsegrain.hpp"
#include "soslab/errors.hpp"
#include "soslab/oracle.hpp"
#include "soslab/percolation.hpp"
#include "support.hpp"

using namespace soslab;

namespace {

ClusterDecomposition no_clusters(const LatticeBox& box) { return decompose_clusters(TauField(box), 1.0); }

Vec random_vec(RngStream& rng) { return {rng.normal(), rng.normal(), rng.normal()}; }

}  // namespace

TEST_CASE("nu with unit conductances on the 3x3 box") {
  const auto box = LatticeBox::cube(2, 3);
  const auto c = no_clusters(box);
  CHECK(compute_nu(TauField(box), c, LatticeBox::cube(2, 1), {1, 0, 0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(compute_nu(TauField(box), c, LatticeBox::cube(2, 1), {0, 0, 0}) == 0.0);
  CHECK(compute_nu_star(TauField(box), LatticeBox::cube(2, 1), {0, 0, 0}) == 0.0);
}

TEST_CASE("nu* on a unit path is q^2/2") {
  const auto box = LatticeBox::cube(1, 30);
  CHECK(compute_nu_star(TauField(box), LatticeBox::half_open_triadic(1, 3, {-13}), {0.7, 0, 0}) ==
        doctest::Approx(0.5 * 0.49).epsilon(1e-12));
}

TEST_CASE("nu on random tau matches a dense constrained minimisation") {
  const auto field = LatticeBox::cube(2, 8);
  const auto tau = testing::random_tau(field, 1, 3.5);
  const auto clusters = decompose_clusters(tau, 3.0);
  REQUIRE(!clusters.clusters.empty());
  const AffineHats hats(clusters);
  const auto region = LatticeBox::cube(2, 4);
  const Vec p{0.6, -1.2, 0};
  const CubeProblem prob(tau, hats, region);

  // Dense oracle: minimise ½Σa(∇v)² with v = ℓ̂_p on ∂U, ℓ̂_p by an independent boundary scan.
  VertexFunction lhat = affine(field, p);
  for (const auto& cl : clusters.clusters) {
    double s = 0.0;
    int n = 0;
    for (const auto& x : cl.vertices)
      for (int ax = 0; ax < 2; ++ax)
        for (int sg : {-1, 1}) {
          Coord y = x;
          y[ax] += sg;
          if (field.contains(y) && clusters.cluster_of(y) < 0) {
            bool dup = false;
            for (const auto& b : cl.boundary) dup = dup || b == y;
            REQUIRE(dup);
          }
        }
    for (const auto& y : cl.boundary) s += affine(field, p)(y), ++n;
    for (const auto& x : cl.vertices) lhat(x) = s / n;
  }
  auto dense = oracle::dirichlet_matrix(region, [&](const Edge& e) { return tau.a(e); });
  const auto inner = region.interior_sites();
  for (std::size_t i = 0; i < inner.size(); ++i)
    for (int ax = 0; ax < 2; ++ax) {
      const Coord up = inner[i] + unit_vector(ax), dn = inner[i] - unit_vector(ax);
      if (region.is_boundary(up)) dense.b[i] += tau.a(Edge{inner[i], ax}) * lhat(up);
      if (region.is_boundary(dn)) dense.b[i] += tau.a(Edge{dn, ax}) * lhat(dn);
    }
  const auto x = oracle::dense_solve(dense);
  VertexFunction v(region);
  for (const auto& y : region.sites()) v(y) = lhat(y);
  for (std::size_t i = 0; i < inner.size(); ++i) v(inner[i]) = x[i];
  double e = 0.0;
  for (const auto& ed : enumerate_edges(region)) e += 0.5 * tau.a(ed) * std::pow(gradient(v, ed), 2);
  e /= region.volume();
  CHECK(prob.nu(p) == doctest::Approx(e).epsilon(1e-8));
}

TEST_CASE("unit conductances give identity matrices on half-open cubes") {
  const auto field = LatticeBox::cube(2, 20);
  const auto c = no_clusters(field);
  const AffineHats hats(c);
  for (int n : {1, 2}) {
    const CubeProblem prob(TauField(field), hats, central_cube(2, n));
    const auto m = coarse_matrices(prob);
    CHECK((m.a_bar - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK((m.a_bar_star - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  }
}

TEST_CASE("minimisers are linear in p and nu is quadratic") {
  const auto field = LatticeBox::cube(2, 13);
  const auto tau = testing::random_tau(field, 2, 2.5);
  const auto clusters = decompose_clusters(tau, 2.0);
  const AffineHats hats(clusters);
  const CubeProblem prob(tau, hats, central_cube(2, 2));
  const Vec p1{0.3, 1.1, 0}, p2{-0.8, 0.4, 0}, p12{-0.5, 1.5, 0};
  const auto v1 = prob.nu_minimizer(p1), v2 = prob.nu_minimizer(p2), v12 = prob.nu_minimizer(p12);
  double worst = 0.0;
  for (const auto& x : prob.region().sites()) worst = std::max(worst, std::abs(v12(x) - v1(x) - v2(x)));
  CHECK(worst < 1e-9);
  CHECK(prob.nu({2, 0, 0}) == doctest::Approx(4.0 * prob.nu({1, 0, 0})).epsilon(1e-9));
  RngStream rng(3, 0);
  std::vector<Vec> extra;
  for (int k = 0; k < 5; ++k) extra.push_back(random_vec(rng));
  CHECK(check_nu_quadratic(prob, extra).residual < 1e-8);
  CHECK(check_nu_star_quadratic(prob, extra).residual < 1e-8);
}

TEST_CASE("second variation of nu") {
  const auto field = LatticeBox::cube(2, 13);
  const auto tau = testing::random_tau(field, 4, 2.0);
  const auto clusters = decompose_clusters(tau, 1.8);
  const AffineHats hats(clusters);
  const CubeProblem prob(tau, hats, central_cube(2, 2));
  const Vec p{1.0, -0.4, 0};
  const auto v = prob.nu_minimizer(p);
  auto w = v;
  const auto noise = testing::random_vertex_function(prob.region(), 5);
  for (const auto& x : prob.region().interior_sites()) w(x) += noise(x);
  auto diff = v;
  for (const auto& x : prob.region().sites()) diff(x) = v(x) - w(x);
  CHECK(prob.energy(w) - prob.nu(p) == doctest::Approx(prob.energy(diff)).epsilon(1e-9));
}

TEST_CASE("reconstruct_matrix validates its input") {
  CHECK_THROWS_AS(reconstruct_matrix({2, {1.0, 1.0}, {}}), DomainError);
  const auto m = reconstruct_matrix({2, {0.5, 1.0}, {2.0}});
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 1) == 2.0);
  CHECK(m(0, 1) == 0.5);
}

TEST_CASE("subadditivity is exact for unit conductances") {
  const auto field = LatticeBox::cube(2, 13);
  const auto cube = central_cube(2, 2);
  const auto kids = triadic_children(cube);
  const std::vector<Vec> ps{{1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  const auto r = check_inequalities(TauField(field), no_clusters(field), cube, kids, ps);
  CHECK(std::abs(r.nu_subadditivity) < 1e-12);
  CHECK(std::abs(r.nu_star_superadditivity) < 1e-12);
  CHECK(r.interface_edges == 0);
  CHECK(r.ok());
}

TEST_CASE("per-sample inequalities hold on random fields") {
  const auto field = LatticeBox::cube(2, 13);
  const auto cube = central_cube(2, 2);
  const auto kids = triadic_children(cube);
  RngStream rng(6, 0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto tau = testing::random_tau(field, 100 + s, 3.0);
    const auto clusters = decompose_clusters(tau, 2.9);
    std::vector<Vec> ps{{1, 0, 0}, {0, 1, 0}};
    ps.push_back(random_vec(rng));
    const auto r = check_inequalities(tau, clusters, cube, kids, ps);
    CHECK(r.nu_subadditivity <= r.slack);
    CHECK(r.nu_star_superadditivity <= r.slack);
    CHECK(r.energy_lower_bound <= r.slack);
    CHECK(r.spatial_flux <= r.slack);
    CHECK(r.spatial_gradient <= r.slack);
    CHECK(r.fenchel <= r.slack);
    CHECK(r.fenchel_identity <= r.slack);
  }
}

TEST_CASE("Fenchel inequality for 20 random (p, q) pairs on 9x9") {
  const auto field = LatticeBox::cube(2, 13);
  const auto tau = testing::random_tau(field, 7, 3.5);
  const auto clusters = decompose_clusters(tau, 3.4);
  RngStream rng(8, 0);
  std::vector<Vec> vs;
  for (int k = 0; k < 5; ++k) vs.push_back(random_vec(rng));
  // All 25 ordered pairs of the 5 vectors are checked.
  const auto r = check_inequalities(tau, clusters, central_cube(2, 2), triadic_children(central_cube(2, 2)), vs);
  CHECK(r.fenchel <= r.slack);
  CHECK(r.fenchel_identity <= r.slack);
}

TEST_CASE("nu* upper bound by inverse conductances") {
  const auto field = LatticeBox::cube(2, 13);
  RngStream rng(9, 0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto tau = testing::random_tau(field, 200 + s, 3.0);
    const auto cube = central_cube(2, 2);
    const Vec q = random_vec(rng);
    double inv = 0.0, directional = 0.0;
    for (const auto& e : enumerate_edges(cube)) {
      inv += 1.0 / tau.a(e);
      directional += q[e.axis] * q[e.axis] / tau.a(e);
    }
    const double nus = compute_nu_star(tau, cube, q);
    CHECK(nus <= 4.0 * (q[0] * q[0] + q[1] * q[1]) * inv / cube.volume());
    CHECK(nus <= (2.0 / 3.0) * directional / cube.volume() * (1 + 1e-12));
  }
}

TEST_CASE("duality ordering and positive definiteness on random fields") {
  const auto field = LatticeBox::cube(2, 13);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto tau = testing::random_tau(field, 300 + s, 3.0);
    const auto clusters = decompose_clusters(tau, 2.9);
    const AffineHats hats(clusters);
    const CubeProblem prob(tau, hats, central_cube(2, 2));
    const auto m = coarse_matrices(prob);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(m.a_bar), b(m.a_bar_star);
    CHECK(a.eigenvalues().minCoeff() > 0.0);
    CHECK(b.eigenvalues().minCoeff() > 0.0);
    CHECK(duality_ordering(prob, m).ok(1e-8));
  }
}

TEST_CASE("scale sweep with unit conductances") {
  const auto field = LatticeBox::cube(2, 14);
  const auto entries = scale_sweep_sample(TauField(field), no_clusters(field), 2);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].cubes == 9);
  CHECK(entries[1].cubes == 1);
  for (const auto& e : entries) {
    CHECK(e.gap < 1e-12);
    CHECK(e.ordering_ok);
    CHECK((e.a_bar - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  }
  const auto summary = summarize_sweep({entries, entries});
  CHECK(summary[0].scalar.value == doctest::Approx(1.0));
  CHECK_THROWS_AS(scale_sweep_sample(TauField(field), no_clusters(field), 3), DomainError);
}

TEST_CASE("corrector flatness") {
  const auto field = LatticeBox::cube(2, 14);
  for (double v : corrector_flatness(TauField(field), no_clusters(field), 2, {1, 0, 0})) CHECK(v < 1e-12);
  const auto tau = testing::random_tau(field, 10, 2.0);
  const auto clusters = decompose_clusters(tau, 1.9);
  const auto a = corrector_flatness(tau, clusters, 2, {0.3, 0.4, 0});
  const auto b = corrector_flatness(tau, clusters, 2, {0.9, 1.2, 0});
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == doctest::Approx(3.0 * a[k]).epsilon(1e-8));
}

TEST_CASE("simplex energies") {
  const auto field = LatticeBox::cube(2, 14);
  const auto tau = testing::random_tau(field, 11, 1.0);
  const auto c = simplex_nu(tau, no_clusters(field), 2, {-4, -4}, {1, 0, 0});
  CHECK(c.simplexes.size() == 2);
  for (double v : c.simplexes) CHECK(v > 0.0);
  CHECK(c.cube > 0.0);
}

TEST_CASE("a cluster without boundary only matters where its hat is read") {
  const auto box = LatticeBox::cube(2, 8);
  ClusterDecomposition c = no_clusters(box);
  Cluster corner;
  corner.vertices = {Coord{7, 8}, Coord{8, 8}};
  corner.edges = {Edge{Coord{7, 8}, 0}};
  corner.diameter = 1;
  c.clusters.push_back(corner);
  const AffineHats hats(c);
  CHECK(hats(Coord{1, 2}, {1, 1, 0}) == 3.0);
  CHECK_THROWS_AS(hats(Coord{8, 8}, {1, 0, 0}), DegenerateClusterError);
  CHECK(compute_nu(TauField(box), c, LatticeBox::cube(2, 1), {1, 0, 0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK_THROWS_AS(compute_nu(TauField(box), c, LatticeBox::cube(2, 8), {1, 0, 0}), DegenerateClusterError);
}
