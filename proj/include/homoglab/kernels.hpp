#pragma once

#include <cstddef>
#include <vector>

namespace homog {

/// Nine-point node stencil on an m x m node lattice. Coefficient k of node
/// r couples r to the node at offset (di, dj) with k = (dj+1)*3 + (di+1).
/// On a box lattice couplings that would leave the lattice must be zero.
struct Stencil9 {
  int m = 0;
  bool periodic = false;
  std::vector<double> c;

  std::size_t nodes() const { return static_cast<std::size_t>(m) * m; }
  double& at(std::size_t r, int di, int dj) { return c[9 * r + (dj + 1) * 3 + (di + 1)]; }
  double at(std::size_t r, int di, int dj) const { return c[9 * r + (dj + 1) * 3 + (di + 1)]; }
  /// Index of the neighbor of (i, j) at offset (di, dj), or -1 off the lattice.
  long neighbor(int i, int j, int di, int dj) const {
    int a = i + di, b = j + dj;
    if (periodic) {
      a = (a + m) % m;
      b = (b + m) % m;
    } else if (a < 0 || b < 0 || a >= m || b >= m) {
      return -1;
    }
    return static_cast<long>(b) * m + a;
  }
};

namespace kernels {

/// y = S x. The serial versions are the reference for the OpenMP ones.
void apply_serial(const Stencil9& s, const double* x, double* y);
void apply(const Stencil9& s, const double* x, double* y);

/// y = b - S x
void residual(const Stencil9& s, const double* b, const double* x, double* y);

/// Plain left-to-right sum.
double dot_serial(std::size_t n, const double* a, const double* b);
/// Fixed-chunk reduction: the result does not depend on the thread count.
double dot(std::size_t n, const double* a, const double* b);

/// y += alpha x
void axpy(std::size_t n, double alpha, const double* x, double* y);
/// y = x + beta y
void xpay(std::size_t n, const double* x, double beta, double* y);

/// One Gauss-Seidel pass over the nodes of parity colour (i%2, j%2) = colour.
/// Nodes of one colour do not couple, so the pass is parallel.
void gauss_seidel_colour(const Stencil9& s, const double* b, double* x, int colour);

}  // namespace kernels
}  // namespace homog
