#include "homoglab/operator.hpp"

#include <cmath>

#include "homoglab/errors.hpp"

namespace homog {

namespace {

// Gradients of the four bilinear basis functions at local point (xi, eta).
std::array<std::array<double, 2>, 4> basis_gradients(double xi, double eta) {
  return {{{-(1 - eta), -(1 - xi)}, {1 - eta, -xi}, {-eta, 1 - xi}, {eta, xi}}};
}

}  // namespace

std::array<std::array<double, 4>, 4> element_stiffness(const Tensor2& t) {
  std::array<std::array<double, 4>, 4> k{};
  for (int q = 0; q < 4; ++q) {
    const auto p = gauss_point(q);
    const auto g = basis_gradients(p[0], p[1]);
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        const double ax = t[0] * g[n][0] + t[1] * g[n][1];
        const double ay = t[2] * g[n][0] + t[3] * g[n][1];
        k[m][n] += kGaussWeight * (g[m][0] * ax + g[m][1] * ay);
      }
  }
  return k;
}

DiscreteOperator::DiscreteOperator(const CoefficientField& a) : a_(a) {
  const Grid& g = a_.grid;
  if (a_.a.size() != g.cell_count()) throw DomainError("operator: coefficient count mismatch");
  symmetric_ = a_.symmetric();
  s_.m = g.nodes_per_axis();
  s_.periodic = g.periodic();
  s_.c.assign(9 * g.node_count(), 0.0);
  const int n = g.n();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto k = element_stiffness(a_[g.cell_index(i, j)]);
      const auto nd = g.cell_nodes(i, j);
      for (int m = 0; m < 4; ++m)
        for (int l = 0; l < 4; ++l) {
          const int di = (l & 1) - (m & 1), dj = (l >> 1) - (m >> 1);
          s_.c[9 * nd[m] + (dj + 1) * 3 + (di + 1)] += k[m][l];
        }
    }
}

DiscreteField DiscreteOperator::apply(const DiscreteField& u) const {
  if (u.location() != Location::node || u.rank() != Rank::scalar)
    throw DomainError("operator apply: expects a node scalar");
  check_same_grid(u.grid(), grid(), "operator apply");
  DiscreteField out(grid(), Rank::scalar, Location::node);
  kernels::apply(s_, u.data(), out.data());
  return out;
}

DiscreteField DiscreteOperator::apply_abs(const DiscreteField& u) const {
  check_same_grid(u.grid(), grid(), "operator apply_abs");
  Stencil9 abs = s_;
  for (double& v : abs.c) v = std::abs(v);
  DiscreteField au(u);
  for (double& v : au.values()) v = std::abs(v);
  DiscreteField out(grid(), Rank::scalar, Location::node);
  kernels::apply(abs, au.data(), out.data());
  return out;
}

DiscreteField apply_tensor(const CoefficientField& a, const DiscreteField& grad) {
  if (grad.rank() != Rank::vector || grad.location() != Location::quadrature)
    throw DomainError("apply_tensor: expects a quadrature vector field");
  DiscreteField out = DiscreteField::zeros_like(grad);
  const std::size_t cells = grad.grid().cell_count();
  for (std::size_t c = 0; c < cells; ++c) {
    const Tensor2& t = a[c];
    for (int q = 0; q < 4; ++q) {
      const std::size_t k = 8 * c + 2 * q;
      out[k] = t[0] * grad[k] + t[1] * grad[k + 1];
      out[k + 1] = t[2] * grad[k] + t[3] * grad[k + 1];
    }
  }
  return out;
}

double relative_residual(const DiscreteOperator& op, const DiscreteField& u,
                         const std::vector<unsigned char>& mask) {
  const DiscreteField r = op.apply(u);
  const DiscreteField s = op.apply_abs(u);
  double num = 0, den = 0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!mask.empty() && !mask[k]) continue;
    num += r[k] * r[k];
    den += s[k] * s[k];
  }
  if (den == 0) return num == 0 ? 0.0 : INFINITY;
  return std::sqrt(num / den);
}

std::vector<unsigned char> node_ball_mask(const Grid& grid, double r) {
  return node_annulus_mask(grid, 0.0, r);
}

}  // namespace homog
