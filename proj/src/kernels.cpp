#include "homoglab/kernels.hpp"

#include <algorithm>
#include <vector>

namespace homog::kernels {

namespace {

constexpr std::size_t kChunk = 4096;

inline double row_product(const Stencil9& s, int i, int j, const double* x) {
  const int m = s.m;
  const std::size_t r = static_cast<std::size_t>(j) * m + i;
  const double* c = s.c.data() + 9 * r;
  if (i > 0 && j > 0 && i < m - 1 && j < m - 1) {
    const double* x0 = x + r - m;
    const double* x1 = x + r;
    const double* x2 = x + r + m;
    return c[0] * x0[-1] + c[1] * x0[0] + c[2] * x0[1] + c[3] * x1[-1] + c[4] * x1[0] +
           c[5] * x1[1] + c[6] * x2[-1] + c[7] * x2[0] + c[8] * x2[1];
  }
  double acc = 0;
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const double w = c[(dj + 1) * 3 + (di + 1)];
      if (w == 0.0) continue;
      const long nb = s.neighbor(i, j, di, dj);
      if (nb >= 0) acc += w * x[nb];
    }
  return acc;
}

}  // namespace

void apply_serial(const Stencil9& s, const double* x, double* y) {
  for (int j = 0; j < s.m; ++j)
    for (int i = 0; i < s.m; ++i) y[static_cast<std::size_t>(j) * s.m + i] = row_product(s, i, j, x);
}

void apply(const Stencil9& s, const double* x, double* y) {
  const int m = s.m;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) y[static_cast<std::size_t>(j) * m + i] = row_product(s, i, j, x);
}

void residual(const Stencil9& s, const double* b, const double* x, double* y) {
  const int m = s.m;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const std::size_t r = static_cast<std::size_t>(j) * m + i;
      y[r] = b[r] - row_product(s, i, j, x);
    }
}

double dot_serial(std::size_t n, const double* a, const double* b) {
  double s = 0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

double dot(std::size_t n, const double* a, const double* b) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    double s = 0;
    for (std::size_t k = lo; k < hi; ++k) s += a[k] * b[k];
    partial[c] = s;
  }
  double s = 0;
  for (double p : partial) s += p;
  return s;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void xpay(std::size_t n, const double* x, double beta, double* y) {
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + beta * y[k];
}

void gauss_seidel_colour(const Stencil9& s, const double* b, double* x, int colour) {
  const int m = s.m;
  const int ci = colour & 1, cj = colour >> 1;
#pragma omp parallel for schedule(static)
  for (int j = cj; j < m; j += 2)
    for (int i = ci; i < m; i += 2) {
      const std::size_t r = static_cast<std::size_t>(j) * m + i;
      const double d = s.c[9 * r + 4];
      if (d == 0.0) continue;
      x[r] += (b[r] - row_product(s, i, j, x)) / d;
    }
}

}  // namespace homog::kernels
