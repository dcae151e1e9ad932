#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace homog {

enum class Topology : int { periodic = 0, box = 1 };

/// Uniform square lattice with unit spacing.
///
/// `n` counts cells per axis. A periodic grid has n*n nodes (node n wraps to
/// node 0); a box grid has (n+1)*(n+1) nodes with the outer ring carrying
/// Dirichlet data. Node (i, j) sits at (i - n/2, j - n/2), so the origin is
/// the central node and cell centers sit at half-integer coordinates.
class Grid {
 public:
  Grid() = default;
  Grid(int n, Topology topology, int dim = 2);

  int dim() const { return dim_; }
  int n() const { return n_; }
  Topology topology() const { return topology_; }
  bool periodic() const { return topology_ == Topology::periodic; }

  int nodes_per_axis() const { return periodic() ? n_ : n_ + 1; }
  std::size_t node_count() const {
    return static_cast<std::size_t>(nodes_per_axis()) * nodes_per_axis();
  }
  std::size_t cell_count() const { return static_cast<std::size_t>(n_) * n_; }

  std::size_t node_index(int i, int j) const {
    return static_cast<std::size_t>(j) * nodes_per_axis() + i;
  }
  std::size_t cell_index(int i, int j) const {
    return static_cast<std::size_t>(j) * n_ + i;
  }
  /// Wraps (periodic) an arbitrary node offset back into range.
  int wrap(int i) const {
    const int m = nodes_per_axis();
    return ((i % m) + m) % m;
  }

  std::array<double, 2> node_coord(int i, int j) const {
    return {static_cast<double>(i - n_ / 2), static_cast<double>(j - n_ / 2)};
  }
  std::array<double, 2> cell_center(int i, int j) const {
    return {i + 0.5 - n_ / 2, j + 0.5 - n_ / 2};
  }

  /// Nodes of cell (i, j) in the order (0,0), (1,0), (0,1), (1,1).
  std::array<std::size_t, 4> cell_nodes(int i, int j) const;

  bool is_boundary_node(int i, int j) const {
    return !periodic() && (i == 0 || j == 0 || i == n_ || j == n_);
  }

  Grid with_topology(Topology t) const { return Grid(n_, t, dim_); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_ && a.topology_ == b.topology_;
  }
  friend bool operator!=(const Grid& a, const Grid& b) { return !(a == b); }

 private:
  int dim_ = 2;
  int n_ = 0;
  Topology topology_ = Topology::box;
};

/// Euclidean ball in lattice units; membership is decided by cell centers
/// (for cell fields) or node positions (for node masks), strictly inside.
struct Ball {
  double radius = 0.0;
  std::array<double, 2> center{0.0, 0.0};
};

/// Cells whose center lies strictly inside the ball. Throws DomainError if
/// the ball is empty or does not fit in the grid.
std::vector<std::size_t> cells_in_ball(const Grid& grid, const Ball& ball);

/// Cells with center in the annulus inner <= |x| < outer (origin centered).
std::vector<std::size_t> cells_in_annulus(const Grid& grid, double inner, double outer);

/// 0/1 node mask of inner <= |x| < outer around the origin.
std::vector<unsigned char> node_annulus_mask(const Grid& grid, double inner, double outer);

void check_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace homog
