#include "homoglab/solver.hpp"

#include <chrono>
#include <cmath>
#include <fmt/format.h>

#include "homoglab/errors.hpp"

namespace homog {

std::vector<unsigned char> boundary_mask(const Grid& grid) {
  std::vector<unsigned char> mask(grid.node_count(), 0);
  const int m = grid.nodes_per_axis();
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      if (grid.is_boundary_node(i, j)) mask[grid.node_index(i, j)] = 1;
  return mask;
}

LinearSolver::LinearSolver(const DiscreteOperator& op, std::vector<unsigned char> fixed,
                           const SolveOptions& opts)
    : op_(&op), fixed_(std::move(fixed)), opts_(opts) {
  const Grid& g = op.grid();
  if (fixed_.empty()) fixed_.assign(g.node_count(), 0);
  if (fixed_.size() != g.node_count()) throw DomainError("solver: fixed mask size mismatch");
  const auto ring = boundary_mask(g);
  bool any = false;
  for (std::size_t k = 0; k < fixed_.size(); ++k) {
    fixed_[k] = (fixed_[k] || ring[k]) ? 1 : 0;
    any = any || fixed_[k];
  }
  singular_ = g.periodic() && !any;

  system_ = op.stencil();
  const int m = system_.m;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const std::size_t r = static_cast<std::size_t>(j) * m + i;
      double* c = system_.c.data() + 9 * r;
      if (fixed_[r]) {
        for (int k = 0; k < 9; ++k) c[k] = 0.0;
        c[4] = 1.0;
        continue;
      }
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const long nb = system_.neighbor(i, j, di, dj);
          if (nb >= 0 && fixed_[nb]) c[(dj + 1) * 3 + (di + 1)] = 0.0;
        }
    }
  if (opts_.preconditioner == Preconditioner::multigrid) {
    mg_ = std::make_unique<Multigrid>(system_, fixed_, opts_.multigrid);
  } else if (opts_.preconditioner == Preconditioner::jacobi) {
    inv_diag_.resize(system_.nodes());
    for (std::size_t r = 0; r < system_.nodes(); ++r) inv_diag_[r] = 1.0 / system_.c[9 * r + 4];
  }
}

void LinearSolver::precondition(const double* r, double* z) const {
  const std::size_t n = system_.nodes();
  switch (opts_.preconditioner) {
    case Preconditioner::multigrid: mg_->precondition(r, z); break;
    case Preconditioner::jacobi:
      for (std::size_t k = 0; k < n; ++k) z[k] = inv_diag_[k] * r[k];
      break;
    case Preconditioner::none: std::copy(r, r + n, z); break;
  }
  for (std::size_t k = 0; k < n; ++k)
    if (fixed_[k]) z[k] = 0.0;
  if (singular_) project(z);
}

void LinearSolver::project(double* v) const {
  const std::size_t n = system_.nodes();
  double s = 0;
  for (std::size_t k = 0; k < n; ++k) s += v[k];
  s /= static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) v[k] -= s;
}

DiscreteField LinearSolver::solve(const DiscreteField& f, const DiscreteField& g,
                                  SolveReport* report) const {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid& grid = op_->grid();
  const std::size_t n = grid.node_count();
  auto check = [&](const DiscreteField& h, const char* what) {
    if (h.size() == 0) return;
    check_same_grid(h.grid(), grid, what);
    if (h.location() != Location::node || h.rank() != Rank::scalar)
      throw DomainError(std::string(what) + ": expects a node scalar");
  };
  check(f, "solve rhs");
  check(g, "solve boundary values");

  DiscreteField x(grid, Rank::scalar, Location::node);
  if (g.size())
    for (std::size_t k = 0; k < n; ++k)
      if (fixed_[k]) x[k] = g[k];
  std::vector<double> r(n, 0.0);
  kernels::apply(op_->stencil(), x.data(), r.data());
  for (std::size_t k = 0; k < n; ++k) r[k] = fixed_[k] ? 0.0 : (f.size() ? f[k] : 0.0) - r[k];
  if (singular_) project(r.data());

  SolveReport rep;
  const bool use_cg = opts_.method == Method::cg ||
                      (opts_.method == Method::automatic && op_->symmetric());
  rep.method = use_cg ? "pcg" : "bicgstab";
  const double bnorm = std::sqrt(kernels::dot(n, r.data(), r.data()));
  std::vector<double> d(n, 0.0);
  if (bnorm == 0.0) {
    rep.converged = true;
  } else if (use_cg) {
    const std::vector<double> b = r;
    std::vector<double> z(n), p(n), q(n);
    precondition(r.data(), z.data());
    p = z;
    double rz = kernels::dot(n, r.data(), z.data());
    for (int it = 1; it <= opts_.max_iterations; ++it) {
      kernels::apply(system_, p.data(), q.data());
      const double pq = kernels::dot(n, p.data(), q.data());
      if (!(pq > 0)) break;
      const double alpha = rz / pq;
      kernels::axpy(n, alpha, p.data(), d.data());
      kernels::axpy(n, -alpha, q.data(), r.data());
      rep.iterations = it;
      if (opts_.record_energy) {
        double e = 0;
        for (std::size_t k = 0; k < n; ++k) e -= 0.5 * d[k] * (b[k] + r[k]);
        rep.energy.push_back(e);
      }
      const double rn = std::sqrt(kernels::dot(n, r.data(), r.data()));
      rep.residual = rn / bnorm;
      if (rep.residual <= opts_.tol) {
        rep.converged = true;
        break;
      }
      precondition(r.data(), z.data());
      const double rz_new = kernels::dot(n, r.data(), z.data());
      kernels::xpay(n, z.data(), rz_new / rz, p.data());
      rz = rz_new;
    }
  } else {
    std::vector<double> rh = r, p(n, 0.0), v(n, 0.0), ph(n), s(n), sh(n), t(n);
    double rho = 1, alpha = 1, omega = 1;
    for (int it = 1; it <= opts_.max_iterations; ++it) {
      const double rho_new = kernels::dot(n, rh.data(), r.data());
      if (rho_new == 0.0) break;
      const double beta = (rho_new / rho) * (alpha / omega);
      for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
      precondition(p.data(), ph.data());
      kernels::apply(system_, ph.data(), v.data());
      alpha = rho_new / kernels::dot(n, rh.data(), v.data());
      for (std::size_t k = 0; k < n; ++k) s[k] = r[k] - alpha * v[k];
      rep.iterations = it;
      const double sn = std::sqrt(kernels::dot(n, s.data(), s.data()));
      if (sn / bnorm <= opts_.tol) {
        kernels::axpy(n, alpha, ph.data(), d.data());
        r = s;
        rep.residual = sn / bnorm;
        rep.converged = true;
        break;
      }
      precondition(s.data(), sh.data());
      kernels::apply(system_, sh.data(), t.data());
      omega = kernels::dot(n, t.data(), s.data()) / kernels::dot(n, t.data(), t.data());
      for (std::size_t k = 0; k < n; ++k) {
        d[k] += alpha * ph[k] + omega * sh[k];
        r[k] = s[k] - omega * t[k];
      }
      rho = rho_new;
      const double rn = std::sqrt(kernels::dot(n, r.data(), r.data()));
      rep.residual = rn / bnorm;
      if (rep.residual <= opts_.tol) {
        rep.converged = true;
        break;
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) x[k] += d[k];
  if (singular_) project(x.data());
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (report) *report = rep;
  if (!rep.converged)
    throw SolverError(fmt::format("{}: no convergence after {} iterations (relative residual {:.3e})",
                                  rep.method, rep.iterations, rep.residual),
                      rep.iterations, rep.residual);
  return x;
}

DiscreteField solve_dirichlet(const DiscreteOperator& op, const DiscreteField& boundary_values,
                              const DiscreteField& rhs, const SolveOptions& opts,
                              SolveReport* report) {
  if (op.grid().periodic()) throw DomainError("solve_dirichlet: grid must be a box");
  if (!(opts.tol > 1e-14 && opts.tol < 1e-4)) throw ParameterError("solve_dirichlet: tol must lie in (1e-14, 1e-4)");
  LinearSolver s(op, {}, opts);
  return s.solve(rhs, boundary_values, report);
}

DiscreteField solve_periodic_mean_zero(const DiscreteOperator& op, const DiscreteField& F,
                                       const SolveOptions& opts, SolveReport* report) {
  if (!op.grid().periodic()) throw DomainError("solve_periodic_mean_zero: grid must be periodic");
  check_same_grid(op.grid(), F.grid(), "solve_periodic_mean_zero");
  LinearSolver s(op, {}, opts);
  return s.solve(discrete_divergence(F), {}, report);
}

std::vector<unsigned char> truncation_mask(const Grid& grid, double side) {
  std::vector<unsigned char> mask = boundary_mask(grid);
  const int m = grid.nodes_per_axis();
  const double h = 0.5 * side;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const auto x = grid.node_coord(i, j);
      if (std::max(std::abs(x[0]), std::abs(x[1])) >= h) mask[grid.node_index(i, j)] = 1;
    }
  return mask;
}

double support_radius(const DiscreteField& f) {
  const Grid& g = f.grid();
  const int nc = f.components();
  double r = 0;
  if (f.location() == Location::node) {
    const int m = g.nodes_per_axis();
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const std::size_t k = g.node_index(i, j);
        bool nz = false;
        for (int c = 0; c < nc; ++c) nz = nz || f[k * nc + c] != 0.0;
        if (nz) {
          const auto x = g.node_coord(i, j);
          r = std::max(r, std::hypot(x[0], x[1]));
        }
      }
    return r;
  }
  const int per = f.location() == Location::quadrature ? 4 * nc : nc;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const std::size_t c = g.cell_index(i, j);
      bool nz = false;
      for (int k = 0; k < per; ++k) nz = nz || f[c * per + k] != 0.0;
      if (nz) {
        const auto x = g.cell_center(i, j);
        r = std::max(r, std::hypot(x[0], x[1]) + std::sqrt(0.5));
      }
    }
  return r;
}

void normalize_mean_zero(DiscreteField& u, double r) {
  const double m = mean_value(u, cells_in_ball(u.grid(), Ball{r}));
  for (double& v : u.values()) v -= m;
}

DiscreteField solve_truncated_whole_space(const LinearSolver& solver, const DiscreteField& f,
                                          double r0, SolveReport* report) {
  DiscreteField u = solver.solve(f, {}, report);
  normalize_mean_zero(u, r0);
  return u;
}

DiscreteField solve_truncated_whole_space(const DiscreteOperator& op, const DiscreteField& F,
                                          const TruncationOptions& topts, const SolveOptions& opts,
                                          SolveReport* report) {
  const Grid& g = op.grid();
  if (g.periodic()) throw DomainError("truncated solve: grid must be a box");
  const double rs = support_radius(F);
  const double side = topts.full_box ? g.n() : topts.box_factor * rs;
  if (topts.box_factor * rs > (topts.full_box ? g.n() : side) + 1e-9 || side > g.n() + 1e-9)
    throw DomainError(fmt::format("truncated solve: support radius {:.2f} too large for box factor {} on N = {}",
                                  rs, topts.box_factor, g.n()));
  const DiscreteField f = F.location() == Location::node ? F : discrete_divergence(F);
  LinearSolver s(op, truncation_mask(g, side), opts);
  return solve_truncated_whole_space(s, f, topts.r0, report);
}

}  // namespace homog
