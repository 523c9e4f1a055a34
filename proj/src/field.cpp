#include "soslab/field.hpp"

#include <algorithm>
#include <cmath>

#include "soslab/errors.hpp"

namespace soslab {

namespace {

BoxIndexer bounding_indexer(const LatticeBox& box) {
  if (box.empty()) throw DomainError("field on an empty box");
  return BoxIndexer(box.dim(), box.lo(), box.hi());
}

bool same_layout(const BoxIndexer& a, const BoxIndexer& b, int da, int db) {
  if (da != db || a.size() != b.size()) return false;
  for (int i = 0; i < da; ++i)
    if (a.extent(i) != b.extent(i) || a.coord(0)[i] != b.coord(0)[i]) return false;
  return true;
}

}  // namespace

VertexFunction::VertexFunction(const LatticeBox& box, double fill)
    : box_(box), ix_(bounding_indexer(box)), values_(ix_.size(), fill) {}

EdgeFunction::EdgeFunction(const LatticeBox& box, double fill)
    : box_(box), ix_(bounding_indexer(box)), values_(ix_.size() * static_cast<std::size_t>(box.dim()), 0.0) {
  if (fill != 0.0)
    for (const auto& e : enumerate_edges(box)) values_[slot(e)] = fill;
}

PhiField::PhiField(const LatticeBox& box, BoundaryCondition bc) : VertexFunction(box, 0.0), bc_(bc) {}

void PhiField::check_invariants() const {
  if (bc_ != BoundaryCondition::dirichlet_zero) return;
  for (const auto& x : box().boundary_sites())
    if ((*this)(x) != 0.0) throw DomainError("Dirichlet field has non-zero boundary value");
}

TauField::TauField(const LatticeBox& box, double fill) : EdgeFunction(box, fill) {}

double TauField::a(const Edge& e) const { return std::exp(tau(e)); }

void TauField::check_invariants() const {
  for (const auto& e : enumerate_edges(box()))
    if (!std::isfinite(tau(e))) throw DomainError("non-finite log-conductance");
}

double gradient(const VertexFunction& phi, const Edge& e) {
  const auto& box = phi.box();
  if (e.axis < 0 || e.axis >= box.dim() || !box.contains(e.base) || !box.contains(e.head()))
    throw DomainError("gradient: edge outside box");
  return phi(e.head()) - phi(e.base);
}

EdgeFunction gradient_field(const VertexFunction& phi) {
  EdgeFunction g(phi.box());
  for (const auto& e : enumerate_edges(phi.box())) g(e) = phi(e.head()) - phi(e.base);
  return g;
}

VertexFunction divergence(const EdgeFunction& f) {
  VertexFunction out(f.box());
  for (const auto& e : enumerate_edges(f.box())) {
    out(e.base) += f(e);
    out(e.head()) -= f(e);
  }
  return out;
}

double TestVectorField::div(const Point& x) const {
  if (divergence) return divergence(x);
  constexpr double h = 1e-3;
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    auto at = [&](double t) {
      Point y = x;
      y[static_cast<std::size_t>(i)] += t;
      return component(i, y);
    };
    s += (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
  }
  return s;
}

TestVectorField TestVectorField::bump(int dim, double R, std::array<double, kMaxDim> c) {
  TestVectorField f;
  f.dim = dim;
  f.R = R;
  f.support_radius = 1.0;
  auto r2 = [dim](const Point& x) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    return s;
  };
  for (int i = 0; i < dim; ++i) {
    const double ci = c[static_cast<std::size_t>(i)];
    f.components.push_back([r2, ci](const Point& x) {
      const double w = 1.0 - r2(x);
      return w > 0.0 ? ci * w * w * w : 0.0;
    });
  }
  f.divergence = [r2, c, dim](const Point& x) {
    const double w = 1.0 - r2(x);
    if (w <= 0.0) return 0.0;
    double cx = 0.0;
    for (int i = 0; i < dim; ++i) cx += c[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    return -6.0 * w * w * cx;
  };
  return f;
}

EdgeFunction sample_on_edges(const TestVectorField& f, const LatticeBox& box) {
  EdgeFunction out(box);
  for (const auto& e : enumerate_edges(box)) {
    Point y{};
    for (int i = 0; i < box.dim(); ++i) y[static_cast<std::size_t>(i)] = static_cast<double>(e.base[i]) / f.R;
    out(e) = f.component(e.axis, y);
  }
  return out;
}

VertexFunction hat_transform(const VertexFunction& f, const ClusterDecomposition& clusters) {
  VertexFunction out = f;
  const auto& box = f.box();
  for (const auto& c : clusters.clusters) {
    bool touches = false;
    for (const auto& x : c.vertices)
      if (box.contains(x)) {
        touches = true;
        break;
      }
    if (!touches) continue;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& y : c.boundary)
      if (box.contains(y)) {
        sum += f(y);
        ++count;
      }
    if (count == 0) throw DegenerateClusterError("hat_transform: cluster boundary lies outside the box");
    const double mean = sum / static_cast<double>(count);
    for (const auto& x : c.vertices)
      if (box.contains(x)) out(x) = mean;
  }
  return out;
}

double evaluate_F_R(const VertexFunction& phi, const TestVectorField& f) {
  const auto& box = phi.box();
  const int d = box.dim();
  if (f.dim != d) throw DomainError("evaluate_F_R: dimension mismatch");
  const auto reach = static_cast<std::int64_t>(std::ceil(f.support_radius * f.R));
  Coord lo{}, hi{};
  for (int i = 0; i < d; ++i) {
    lo[i] = -reach;
    hi[i] = reach;
  }
  const BoxIndexer window(d, lo, hi);
  double sum = 0.0;
  for (std::size_t k = 0; k < window.size(); ++k) {
    const Coord x = window.coord(k);
    Point y{};
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
      y[static_cast<std::size_t>(i)] = static_cast<double>(x[i]) / f.R;
      r2 += y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    }
    if (r2 >= f.support_radius * f.support_radius) continue;
    if (!box.contains(x) || box.is_boundary(x)) throw DomainError("evaluate_F_R: support of f_R leaves the box interior");
    for (int i = 0; i < d; ++i) {
      const double fi = f.component(i, y);
      if (fi != 0.0) sum += fi * (phi(x + unit_vector(i)) - phi(x));
    }
  }
  return sum * std::pow(f.R, -0.5 * d);
}

double inner_product_R(std::span<const double> g, std::span<const double> h, double R, int dim) {
  if (g.size() != h.size()) throw DomainError("inner_product_R: mismatched index sets");
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) s += g[k] * h[k];
  return s * std::pow(R, -static_cast<double>(dim));
}

double inner_product_R(const EdgeFunction& g, const EdgeFunction& h, double R) {
  if (!same_layout(g.indexer(), h.indexer(), g.box().dim(), h.box().dim()))
    throw DomainError("inner_product_R: mismatched index sets");
  return inner_product_R(g.values(), h.values(), R, g.box().dim());
}

double inner_product_R(const VertexFunction& g, const VertexFunction& h, double R) {
  if (!same_layout(g.indexer(), h.indexer(), g.box().dim(), h.box().dim()))
    throw DomainError("inner_product_R: mismatched index sets");
  return inner_product_R(g.values(), h.values(), R, g.box().dim());
}

VertexFunction affine(const LatticeBox& box, const std::array<double, kMaxDim>& p) {
  VertexFunction out(box);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Coord x = out.indexer().coord(k);
    double v = 0.0;
    for (int i = 0; i < box.dim(); ++i) v += p[static_cast<std::size_t>(i)] * static_cast<double>(x[i]);
    out[k] = v;
  }
  return out;
}

}  // namespace soslab
