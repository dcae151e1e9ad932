#include "homoglab/multigrid.hpp"

#include <algorithm>

#include "homoglab/errors.hpp"

namespace homog {

namespace {

constexpr std::size_t kDenseNodes = 100;

bool can_coarsen(const Stencil9& s) {
  if (s.nodes() <= kDenseNodes) return false;
  if (s.periodic) return s.m % 2 == 0 && s.m / 2 >= 4 && (s.m / 2) % 4 == 0;
  return (s.m - 1) % 2 == 0 && (s.m - 1) / 2 >= 2;
}

}  // namespace

Multigrid::Multigrid(const Stencil9& system, std::vector<unsigned char> fixed,
                     const MultigridOptions& opts)
    : opts_(opts) {
  if (fixed.size() != system.nodes()) throw DomainError("multigrid: mask size mismatch");
  levels_.push_back({system, std::move(fixed), {}, {}, {}});
  while (static_cast<int>(levels_.size()) < opts_.max_levels && can_coarsen(levels_.back().a)) {
    const Level& f = levels_.back();
    Level c;
    c.a.periodic = f.a.periodic;
    c.a.m = f.a.periodic ? f.a.m / 2 : (f.a.m - 1) / 2 + 1;
    c.fixed.assign(c.a.nodes(), 0);
    Stencil9 ac = galerkin(f, c);
    // Coarse nodes whose prolongation vanishes on the free fine nodes.
    for (std::size_t r = 0; r < ac.nodes(); ++r)
      if (ac.c[9 * r + 4] == 0.0) {
        std::fill(ac.c.begin() + 9 * r, ac.c.begin() + 9 * r + 9, 0.0);
        ac.c[9 * r + 4] = 1.0;
        c.fixed[r] = 1;
      }
    c.a = std::move(ac);
    levels_.push_back(std::move(c));
  }
  for (auto& l : levels_) {
    l.x.assign(l.a.nodes(), 0.0);
    l.b.assign(l.a.nodes(), 0.0);
    l.r.assign(l.a.nodes(), 0.0);
  }
  // Dense inverse of the coarsest level.
  const Level& last = levels_.back();
  const int nn = static_cast<int>(last.a.nodes());
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(nn, nn);
  for (int j = 0; j < last.a.m; ++j)
    for (int i = 0; i < last.a.m; ++i) {
      const int r = j * last.a.m + i;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const long nb = last.a.neighbor(i, j, di, dj);
          if (nb >= 0) dense(r, nb) += last.a.at(r, di, dj);
        }
    }
  // Periodic levels have the constants as left and right kernel; shifting by
  // a multiple of 11^T gives an invertible matrix that agrees with the
  // pseudo-inverse on mean-zero vectors.
  if (last.a.periodic) {
    const double shift = dense.diagonal().mean() / nn;
    dense.array() += shift;
  }
  coarse_inverse_ = dense.fullPivLu().inverse();
}

void Multigrid::prolong_add(const Level& coarse, const Level& fine, const double* xc,
                            double* xf) const {
  const int mf = fine.a.m, mc = coarse.a.m;
  const bool per = fine.a.periodic;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < mf; ++j) {
    const int j0 = j / 2;
    const int j1 = (j % 2 == 0) ? j0 : (per ? (j0 + 1) % mc : j0 + 1);
    const double wj = (j % 2 == 0) ? 1.0 : 0.5;
    for (int i = 0; i < mf; ++i) {
      const std::size_t r = static_cast<std::size_t>(j) * mf + i;
      if (fine.fixed[r]) continue;
      const int i0 = i / 2;
      const int i1 = (i % 2 == 0) ? i0 : (per ? (i0 + 1) % mc : i0 + 1);
      const double wi = (i % 2 == 0) ? 1.0 : 0.5;
      double v;
      if (i % 2 == 0 && j % 2 == 0) {
        v = xc[static_cast<std::size_t>(j0) * mc + i0];
      } else if (j % 2 == 0) {
        v = wi * (xc[static_cast<std::size_t>(j0) * mc + i0] + xc[static_cast<std::size_t>(j0) * mc + i1]);
      } else if (i % 2 == 0) {
        v = wj * (xc[static_cast<std::size_t>(j0) * mc + i0] + xc[static_cast<std::size_t>(j1) * mc + i0]);
      } else {
        v = 0.25 * (xc[static_cast<std::size_t>(j0) * mc + i0] + xc[static_cast<std::size_t>(j0) * mc + i1] +
                    xc[static_cast<std::size_t>(j1) * mc + i0] + xc[static_cast<std::size_t>(j1) * mc + i1]);
      }
      xf[r] += v;
    }
  }
}

void Multigrid::restrict_to(const Level& fine, const Level& coarse, const double* rf,
                            double* rc) const {
  const int mf = fine.a.m, mc = coarse.a.m;
  const bool per = fine.a.periodic;
  // Transpose of prolong_add, gathered per coarse node.
#pragma omp parallel for schedule(static)
  for (int J = 0; J < mc; ++J)
    for (int I = 0; I < mc; ++I) {
      double s = 0;
      for (int dj = -1; dj <= 1; ++dj) {
        int j = 2 * J + dj;
        if (per) j = (j + mf) % mf;
        else if (j < 0 || j >= mf) continue;
        const double wj = dj == 0 ? 1.0 : 0.5;
        for (int di = -1; di <= 1; ++di) {
          int i = 2 * I + di;
          if (per) i = (i + mf) % mf;
          else if (i < 0 || i >= mf) continue;
          const std::size_t r = static_cast<std::size_t>(j) * mf + i;
          if (fine.fixed[r]) continue;
          s += wj * (di == 0 ? 1.0 : 0.5) * rf[r];
        }
      }
      rc[static_cast<std::size_t>(J) * mc + I] = s;
    }
}

Stencil9 Multigrid::galerkin(const Level& fine, const Level& coarse) const {
  Stencil9 out;
  out.m = coarse.a.m;
  out.periodic = coarse.a.periodic;
  out.c.assign(9 * out.nodes(), 0.0);
  std::vector<double> xc(out.nodes()), xf(fine.a.nodes()), yf(fine.a.nodes()), yc(out.nodes());
  const int mc = out.m;
  for (int colour = 0; colour < 16; ++colour) {
    const int ci = colour % 4, cj = colour / 4;
    std::fill(xc.begin(), xc.end(), 0.0);
    for (int J = cj; J < mc; J += 4)
      for (int I = ci; I < mc; I += 4) xc[static_cast<std::size_t>(J) * mc + I] = 1.0;
    std::fill(xf.begin(), xf.end(), 0.0);
    prolong_add(coarse, fine, xc.data(), xf.data());
    kernels::apply(fine.a, xf.data(), yf.data());
    restrict_to(fine, coarse, yf.data(), yc.data());
    for (int J = 0; J < mc; ++J)
      for (int I = 0; I < mc; ++I) {
        const std::size_t r = static_cast<std::size_t>(J) * mc + I;
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            const long nb = out.neighbor(I, J, di, dj);
            if (nb < 0) continue;
            const int ni = static_cast<int>(nb % mc), nj = static_cast<int>(nb / mc);
            if (ni % 4 == ci && nj % 4 == cj) out.at(r, di, dj) = yc[r];
          }
      }
  }
  return out;
}

void Multigrid::cycle(std::size_t l) const {
  const Level& L = levels_[l];
  const std::size_t n = L.a.nodes();
  if (l + 1 == levels_.size()) {
    Eigen::Map<const Eigen::VectorXd> b(L.b.data(), static_cast<Eigen::Index>(n));
    Eigen::Map<Eigen::VectorXd> x(L.x.data(), static_cast<Eigen::Index>(n));
    if (L.a.periodic) {
      const Eigen::VectorXd bc = b.array() - b.mean();
      x = coarse_inverse_ * bc;
      x.array() -= x.mean();
    } else {
      x = coarse_inverse_ * b;
    }
    return;
  }
  std::fill(L.x.begin(), L.x.end(), 0.0);
  for (int s = 0; s < opts_.pre_sweeps; ++s)
    for (int c = 0; c < 4; ++c) kernels::gauss_seidel_colour(L.a, L.b.data(), L.x.data(), c);
  kernels::residual(L.a, L.b.data(), L.x.data(), L.r.data());
  const Level& C = levels_[l + 1];
  restrict_to(L, C, L.r.data(), C.b.data());
  cycle(l + 1);
  prolong_add(C, L, C.x.data(), L.x.data());
  for (int s = 0; s < opts_.post_sweeps; ++s)
    for (int c = 3; c >= 0; --c) kernels::gauss_seidel_colour(L.a, L.b.data(), L.x.data(), c);
}

void Multigrid::precondition(const double* r, double* z) const {
  const Level& L = levels_.front();
  std::copy(r, r + L.a.nodes(), L.b.begin());
  cycle(0);
  std::copy(L.x.begin(), L.x.end(), z);
}

}  // namespace homog
