#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "soslab/cluster.hpp"
#include "soslab/lattice.hpp"

namespace soslab {

enum class BoundaryCondition : std::uint8_t { dirichlet_zero = 0, free = 1 };

// Values on the sites of a box, in BoxIndexer order of its bounding box.
class VertexFunction {
 public:
  VertexFunction() = default;
  explicit VertexFunction(const LatticeBox& box, double fill = 0.0);

  const LatticeBox& box() const { return box_; }
  const BoxIndexer& indexer() const { return ix_; }
  std::size_t size() const { return values_.size(); }
  double operator()(const Coord& x) const { return values_[ix_.index(x)]; }
  double& operator()(const Coord& x) { return values_[ix_.index(x)]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  LatticeBox box_;
  BoxIndexer ix_;
  std::vector<double> values_;
};

// Values on edges, slot site_index(base) * d + axis. Slots of edges leaving
// the box are kept at zero.
class EdgeFunction {
 public:
  EdgeFunction() = default;
  explicit EdgeFunction(const LatticeBox& box, double fill = 0.0);

  const LatticeBox& box() const { return box_; }
  const BoxIndexer& indexer() const { return ix_; }
  std::size_t slot(const Edge& e) const { return ix_.index(e.base) * static_cast<std::size_t>(box_.dim()) + e.axis; }
  double operator()(const Edge& e) const { return values_[slot(e)]; }
  double& operator()(const Edge& e) { return values_[slot(e)]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  LatticeBox box_;
  BoxIndexer ix_;
  std::vector<double> values_;
};

class PhiField : public VertexFunction {
 public:
  PhiField() = default;
  PhiField(const LatticeBox& box, BoundaryCondition bc);

  BoundaryCondition bc() const { return bc_; }
  // Throws DomainError if a Dirichlet field has non-zero boundary values.
  void check_invariants() const;

 private:
  BoundaryCondition bc_ = BoundaryCondition::dirichlet_zero;
};

class TauField : public EdgeFunction {
 public:
  TauField() = default;
  explicit TauField(const LatticeBox& box, double fill = 0.0);

  double tau(const Edge& e) const { return (*this)(e); }
  double a(const Edge& e) const;
  // Throws DomainError on non-finite τ.
  void check_invariants() const;
};

double gradient(const VertexFunction& phi, const Edge& e);
EdgeFunction gradient_field(const VertexFunction& phi);
// div F(x) = Σ_{base(e)=x} F(e) − Σ_{head(e)=x} F(e); then
// Σ_x w(x) div F(x) = −Σ_e F(e) ∇w(e) whenever w vanishes off the interior.
VertexFunction divergence(const EdgeFunction& f);

using Point = std::array<double, kMaxDim>;
using ScalarField = std::function<double(const Point&)>;

struct TestVectorField {
  int dim = 2;
  std::vector<ScalarField> components;
  // Continuum divergence; when absent a fourth-order finite difference is used.
  ScalarField divergence;
  double support_radius = 1.0;
  double R = 1.0;

  double component(int i, const Point& x) const { return components[static_cast<std::size_t>(i)](x); }
  double div(const Point& x) const;

  // f_i = c_i (1 − |x|²)³ on |x| < 1.
  static TestVectorField bump(int dim, double R, std::array<double, kMaxDim> c = {1.0, 0.0, 0.0});
};

// f_R on the edges of the box: f_i(x/R) on (x, x + e_i).
EdgeFunction sample_on_edges(const TestVectorField& f, const LatticeBox& box);

VertexFunction hat_transform(const VertexFunction& f, const ClusterDecomposition& clusters);

double evaluate_F_R(const VertexFunction& phi, const TestVectorField& f);

double inner_product_R(std::span<const double> g, std::span<const double> h, double R, int dim);
double inner_product_R(const EdgeFunction& g, const EdgeFunction& h, double R);
double inner_product_R(const VertexFunction& g, const VertexFunction& h, double R);

// Affine function ℓ_p(x) = p·x on the sites of the box.
VertexFunction affine(const LatticeBox& box, const std::array<double, kMaxDim>& p);

}  // namespace soslab
