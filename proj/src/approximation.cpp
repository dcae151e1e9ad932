#include "homoglab/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>

#include "homoglab/errors.hpp"

namespace homog {

DiscreteField random_a_harmonic(const DiscreteOperator& op, std::uint64_t seed, int modes,
                                const SolveOptions& opts) {
  const Grid& g = op.grid();
  if (g.periodic()) throw DomainError("random_a_harmonic: grid must be a box");
  if (modes < 1) throw ParameterError("random_a_harmonic: modes must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<std::complex<double>> c(modes);
  for (auto& z : c) {
    const double re = nd(rng);
    const double im = nd(rng);
    z = {re, -im};  // Re(c z^m) = re Re z^m + im Im z^m
  }
  const double L = g.n() / 2.0;
  const auto data = sample_nodes(g, [&](double x, double y) {
    const std::complex<double> z(x / L, y / L);
    std::complex<double> p = z, s = 0;
    for (int m = 0; m < modes; ++m, p *= z) s += c[m] * p;
    return s.real();
  });
  DiscreteField ring = DiscreteField::zeros_like(data);
  const int m = g.nodes_per_axis();
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      if (g.is_boundary_node(i, j)) ring[g.node_index(i, j)] = data[g.node_index(i, j)];
  return solve_dirichlet(op, ring, {}, opts);
}

double smoothstep(double t) {
  const double s = std::clamp((t + 1) / 2, 0.0, 1.0);
  return s * s * (3 - 2 * s);
}

DiscreteField nodal_derivative(const DiscreteField& u, int dir) {
  const Grid& g = u.grid();
  DiscreteField d = DiscreteField::zeros_like(u);
  const int m = g.nodes_per_axis();
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      int lo_i = i, lo_j = j, hi_i = i, hi_j = j;
      (dir == 0 ? lo_i : lo_j) -= 1;
      (dir == 0 ? hi_i : hi_j) += 1;
      double span = 2;
      if (g.periodic()) {
        lo_i = g.wrap(lo_i), lo_j = g.wrap(lo_j), hi_i = g.wrap(hi_i), hi_j = g.wrap(hi_j);
      } else {
        if (lo_i < 0 || lo_j < 0) lo_i = i, lo_j = j, span = 1;
        if (hi_i >= m || hi_j >= m) hi_i = i, hi_j = j, span = 1;
      }
      d[g.node_index(i, j)] = (u[g.node_index(hi_i, hi_j)] - u[g.node_index(lo_i, lo_j)]) / span;
    }
  return d;
}

namespace {

double shell_energy(const DiscreteField& grad, double r) {
  const auto cells = cells_in_annulus(grad.grid(), r - 0.5, r + 0.5);
  return cells.empty() ? 0.0 : mean_square(grad, cells);
}

double min_symmetric_eigenvalue(const Tensor2& t) {
  Eigen::Matrix2d m;
  m << t[0], 0.5 * (t[1] + t[2]), 0.5 * (t[1] + t[2]), t[3];
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues()(0);
}

}  // namespace

ApproximationResult homogenized_approximation(const DiscreteField& u, double R,
                                              const HigherOrderContext& ctx,
                                              const ApproximationOptions& opts) {
  const Grid& g = ctx.grid();
  check_same_grid(g, u.grid(), "homogenized_approximation");
  if (!(R >= 8 && R <= g.n() / 2.0 - 1)) throw ParameterError("homogenized_approximation: R must lie in [8, N/2 - 1]");
  if (opts.candidates < 1) throw ParameterError("homogenized_approximation: need >= 1 candidate radius");

  ApproximationResult res;
  res.R = R;
  res.residual = relative_residual(ctx.op(), u, node_ball_mask(g, R));
  if (res.residual > opts.residual_tol)
    throw PreconditionError("homogenized_approximation: u is not a-harmonic on B_R (relative residual " +
                            std::to_string(res.residual) + ")");
  res.eps = ctx.eps(R);
  if (res.eps > 1) throw PreconditionError("homogenized_approximation: eps_R = " + std::to_string(res.eps) + " > 1");

  res.energy = gradient_energy(u, R);
  const auto grad = discrete_gradient(u);
  double best = 0;
  for (int c = 0; c < opts.candidates; ++c) {
    const double r = opts.candidates == 1 ? R : R * (0.75 + 0.25 * c / (opts.candidates - 1));
    // R' int_{dB_R'} |grad u|^2 / |B_R'| = d * (shell mean)
    const double b = 2 * shell_energy(grad, r);
    res.candidates.push_back(r);
    res.boundary_energy.push_back(b);
    if (c == 0 || b < best) best = b, res.R_prime = r;
  }
  res.boundary_constant = res.energy > 0 ? best / res.energy : 0;

  // a_hom-harmonic function in B_R' with u's values outside
  const auto ahom = constant_field(g, ctx.a_hom(), std::min(1.0, min_symmetric_eigenvalue(ctx.a_hom())));
  const DiscreteOperator hom(ahom);
  std::vector<unsigned char> fixed(g.node_count(), 0);
  const int m = g.nodes_per_axis();
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const auto x = g.node_coord(i, j);
      if (std::hypot(x[0], x[1]) >= res.R_prime) fixed[g.node_index(i, j)] = 1;
    }
  LinearSolver solver(hom, fixed, opts.solve);
  res.u_hom = solver.solve({}, u);

  res.rho = 0.25 * std::pow(res.eps, 4.0 / 9.0) * res.R_prime;
  res.two_scale = res.u_hom;
  const DiscreteField d0 = nodal_derivative(res.u_hom, 0), d1 = nodal_derivative(res.u_hom, 1);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const auto x = g.node_coord(i, j);
      const double r = std::hypot(x[0], x[1]);
      double eta;
      if (res.rho > 0) eta = smoothstep(2 * (res.R_prime - res.rho / 2 - r) / res.rho);
      else eta = r < res.R_prime ? 1.0 : 0.0;
      const std::size_t k = g.node_index(i, j);
      res.two_scale[k] += eta * (ctx.phi(0)[k] * d0[k] + ctx.phi(1)[k] * d1[k]);
    }

  res.error = gradient_energy(u - res.two_scale, R / 2);
  res.energy_constant = res.energy > 0 ? gradient_energy(res.u_hom, R / 2) / res.energy : 0;
  const double scale = std::pow(res.eps, 2.0 / 9.0) * res.energy;
  if (scale > 0) res.ratio = res.error / scale;
  else res.ratio = res.error <= 1e-10 * std::max(res.energy, 1e-300) ? 0.0 : HUGE_VAL;
  return res;
}

}  // namespace homog
