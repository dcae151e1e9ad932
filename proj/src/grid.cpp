#include "homoglab/grid.hpp"

#include <cmath>
#include <string>

#include "homoglab/errors.hpp"

namespace homog {

Grid::Grid(int n, Topology topology, int dim) : dim_(dim), n_(n), topology_(topology) {
  if (dim == 3) throw ParameterError("grid: dim = 3 is not supported by this build");
  if (dim != 2) throw ParameterError("grid: dim must be 2");
  if (n < 8 || n % 2 != 0)
    throw ParameterError("grid: cell count per axis must be even and >= 8, got " +
                         std::to_string(n));
}

std::array<std::size_t, 4> Grid::cell_nodes(int i, int j) const {
  const int ip = periodic() ? (i + 1) % n_ : i + 1;
  const int jp = periodic() ? (j + 1) % n_ : j + 1;
  return {node_index(i, j), node_index(ip, j), node_index(i, jp), node_index(ip, jp)};
}

namespace {

// Minimum-image displacement along one axis on a periodic grid.
double periodic_delta(double d, int n) {
  return d - n * std::round(d / n);
}

}  // namespace

std::vector<std::size_t> cells_in_ball(const Grid& grid, const Ball& ball) {
  const int n = grid.n();
  if (ball.radius < 0.5) throw DomainError("ball: radius below half a lattice spacing");
  if (ball.radius > n / 2.0 + 1e-12) throw DomainError("ball: radius exceeds half the grid");
  const double r2 = ball.radius * ball.radius;
  std::vector<std::size_t> out;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const auto c = grid.cell_center(i, j);
      double dx = c[0] - ball.center[0];
      double dy = c[1] - ball.center[1];
      if (grid.periodic()) {
        dx = periodic_delta(dx, n);
        dy = periodic_delta(dy, n);
      }
      if (dx * dx + dy * dy < r2) out.push_back(grid.cell_index(i, j));
    }
  }
  if (out.empty()) throw DomainError("ball: contains no cell centers");
  return out;
}

std::vector<std::size_t> cells_in_annulus(const Grid& grid, double inner, double outer) {
  const int n = grid.n();
  const double lo = inner * inner, hi = outer * outer;
  // Only scan the bounding box of the outer circle.
  const int half = n / 2;
  const int ext = std::min(half, static_cast<int>(std::ceil(outer)) + 1);
  std::vector<std::size_t> out;
  for (int j = half - ext; j < half + ext; ++j) {
    for (int i = half - ext; i < half + ext; ++i) {
      const auto c = grid.cell_center(i, j);
      const double d2 = c[0] * c[0] + c[1] * c[1];
      if (d2 >= lo && d2 < hi) out.push_back(grid.cell_index(i, j));
    }
  }
  return out;
}

std::vector<unsigned char> node_annulus_mask(const Grid& grid, double inner, double outer) {
  const int m = grid.nodes_per_axis();
  std::vector<unsigned char> mask(grid.node_count(), 0);
  const double lo = inner * inner, hi = outer * outer;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const auto x = grid.node_coord(i, j);
      const double d2 = x[0] * x[0] + x[1] * x[1];
      if (d2 >= lo && d2 < hi) mask[grid.node_index(i, j)] = 1;
    }
  }
  return mask;
}

void check_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) throw DomainError(std::string(what) + ": mismatched grids");
}

}  // namespace homog
