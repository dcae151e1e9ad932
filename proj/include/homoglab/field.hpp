#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "homoglab/grid.hpp"

namespace homog {

enum class Rank : int { scalar = 0, vector = 1, tensor = 2, tensor3 = 3 };

/// Where the values of a field live. Degrees of freedom are on nodes,
/// coefficient-like data on cells, and gradients of node fields at the four
/// Gauss points of each cell (so that div(grad u) is the exact bilinear-FE
/// Laplacian).
enum class Location : int { node = 0, cell = 1, quadrature = 2 };

int component_count(Rank rank, int dim = 2);

/// Gauss abscissae on the unit cell and the weight of each of the four points.
inline constexpr double kGaussLo = 0.21132486540518711775;  // 1/2 - 1/(2 sqrt 3)
inline constexpr double kGaussHi = 0.78867513459481288225;  // 1/2 + 1/(2 sqrt 3)
inline constexpr double kGaussWeight = 0.25;
/// Local coordinates of Gauss point q (q = qy*2 + qx).
inline std::array<double, 2> gauss_point(int q) {
  return {(q & 1) ? kGaussHi : kGaussLo, (q & 2) ? kGaussHi : kGaussLo};
}

/// Lattice function with row-major storage, components fastest.
class DiscreteField {
 public:
  DiscreteField() = default;
  DiscreteField(const Grid& grid, Rank rank, Location location);
  DiscreteField(const Grid& grid, Rank rank, Location location, std::vector<double> values);

  static DiscreteField zeros_like(const DiscreteField& f) {
    return DiscreteField(f.grid_, f.rank_, f.location_);
  }

  const Grid& grid() const { return grid_; }
  Rank rank() const { return rank_; }
  Location location() const { return location_; }
  int components() const { return component_count(rank_, grid_.dim()); }
  /// Number of sites (nodes, cells, or Gauss points).
  std::size_t sites() const;
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  DiscreteField& operator+=(const DiscreteField& o);
  DiscreteField& operator-=(const DiscreteField& o);
  DiscreteField& operator*=(double s);
  /// this += s * o
  DiscreteField& axpy(double s, const DiscreteField& o);

  bool all_finite() const;

 private:
  Grid grid_;
  Rank rank_ = Rank::scalar;
  Location location_ = Location::node;
  std::vector<double> values_;
};

DiscreteField operator+(DiscreteField a, const DiscreteField& b);
DiscreteField operator-(DiscreteField a, const DiscreteField& b);
DiscreteField operator*(double s, DiscreteField a);

/// Element-wise gradient of a node scalar, evaluated at the Gauss points.
DiscreteField discrete_gradient(const DiscreteField& u);

/// Node functional div(F)_n = -sum_cells F . grad(phi_n), integrated exactly
/// for quadrature-located F and with F constant per cell for cell-located F.
DiscreteField discrete_divergence(const DiscreteField& F);

/// Averages a quadrature field to one value per cell (the cell-center value
/// for gradients of node fields).
DiscreteField cell_average(const DiscreteField& f);

/// Value of the bilinear interpolant of node scalar u at local point (xi, eta) of cell (i, j).
double interpolate(const DiscreteField& u, int i, int j, double xi, double eta);

enum class Mean { raw, quadratic };

/// Mean over the cells of a ball: (avg |f|^2)^(1/2) or the plain mean of a
/// scalar. Node fields are integrated through their bilinear interpolant.
double ball_average(const DiscreteField& f, const Ball& ball, Mean mean = Mean::quadratic);

/// Average of |f|^2 over the listed cells (Gauss quadrature inside each cell).
double mean_square(const DiscreteField& f, const std::vector<std::size_t>& cells);
/// Average of f (scalar) over the listed cells.
double mean_value(const DiscreteField& f, const std::vector<std::size_t>& cells);

/// Copies a periodic field onto the box grid with the same cells; node
/// values on the outer ring repeat the wrapped values.
DiscreteField to_box(const DiscreteField& f);

/// Node scalar sampled from a function of the node coordinates.
template <class F>
DiscreteField sample_nodes(const Grid& grid, F&& fn) {
  DiscreteField u(grid, Rank::scalar, Location::node);
  const int m = grid.nodes_per_axis();
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const auto x = grid.node_coord(i, j);
      u[grid.node_index(i, j)] = fn(x[0], x[1]);
    }
  return u;
}

}  // namespace homog
