#include "homoglab/correctors.hpp"

#include <fftw3.h>
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "homoglab/errors.hpp"
#include "homoglab/field_io.hpp"

namespace homog {

DiscreteField CorrectorSet::sigma_field() const {
  DiscreteField out(grid, Rank::tensor3, Location::cell);
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) out[8 * c + 4 * i + 2 * j + k] = sigma(i, j, k, c);
  return out;
}

std::array<DiscreteField, 2> compute_phi(const DiscreteOperator& op, const SolveOptions& opts,
                                         std::vector<SolveReport>* reports) {
  const Grid& g = op.grid();
  if (!g.periodic()) throw DomainError("compute_phi: grid must be periodic");
  const CoefficientField& a = op.coefficients();
  LinearSolver solver(op, {}, opts);
  std::array<DiscreteField, 2> phi;
  for (int i = 0; i < 2; ++i) {
    DiscreteField F(g, Rank::vector, Location::quadrature);
    for (std::size_t c = 0; c < g.cell_count(); ++c)
      for (int q = 0; q < 4; ++q) {
        F[8 * c + 2 * q] = a[c][i];
        F[8 * c + 2 * q + 1] = a[c][2 + i];
      }
    SolveReport rep;
    phi[i] = solver.solve(discrete_divergence(F), {}, &rep);
    if (reports) reports->push_back(rep);
  }
  return phi;
}

void compute_ahom_and_flux(const CoefficientField& a, const std::array<DiscreteField, 2>& phi,
                           Tensor2& a_hom, std::array<DiscreteField, 2>& q) {
  const Grid& g = a.grid;
  const std::size_t cells = g.cell_count();
  for (int i = 0; i < 2; ++i) {
    check_same_grid(phi[i].grid(), g, "compute_ahom_and_flux");
    DiscreteField flux = apply_tensor(a, discrete_gradient(phi[i]));
    double mx = 0, my = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      double sx = 0, sy = 0;
      for (int p = 0; p < 4; ++p) {
        double& fx = flux[8 * c + 2 * p];
        double& fy = flux[8 * c + 2 * p + 1];
        fx += a[c][i];
        fy += a[c][2 + i];
        sx += fx;
        sy += fy;
      }
      mx += 0.25 * sx;
      my += 0.25 * sy;
    }
    mx /= static_cast<double>(cells);
    my /= static_cast<double>(cells);
    a_hom[i] = mx;
    a_hom[2 + i] = my;
    for (std::size_t c = 0; c < cells; ++c)
      for (int p = 0; p < 4; ++p) {
        flux[8 * c + 2 * p] -= mx;
        flux[8 * c + 2 * p + 1] -= my;
      }
    q[i] = std::move(flux);
  }
}

EdgeFlux edge_fluxes(const DiscreteField& q) {
  const Grid& g = q.grid();
  if (!g.periodic() || q.rank() != Rank::vector || q.location() != Location::quadrature)
    throw DomainError("edge_fluxes: expects a periodic quadrature vector field");
  const int n = g.n();
  EdgeFlux e{std::vector<double>(g.node_count(), 0.0), std::vector<double>(g.node_count(), 0.0)};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t c = g.cell_index(i, j);
      // Element contributions to the node divergence, local node order (00, 10, 01, 11).
      double f[4] = {0, 0, 0, 0};
      for (int p = 0; p < 4; ++p) {
        const auto x = gauss_point(p);
        const double qx = q[8 * c + 2 * p], qy = q[8 * c + 2 * p + 1];
        const double xi = x[0], eta = x[1];
        f[0] -= kGaussWeight * (qx * (-(1 - eta)) + qy * (-(1 - xi)));
        f[1] -= kGaussWeight * (qx * (1 - eta) + qy * (-xi));
        f[2] -= kGaussWeight * (qx * (-eta) + qy * (1 - xi));
        f[3] -= kGaussWeight * (qx * eta + qy * xi);
      }
      // Counter-clockwise edge flows 00->10->11->01->00 with zero circulation.
      const double f1 = f[1], f2 = f[3], f3 = f[2];
      const double g0 = (3 * f1 + 2 * f2 + f3) / 4;
      const double g1 = g0 - f1, g2 = g1 - f2, g3 = g2 - f3;
      const int ip = (i + 1) % n, jp = (j + 1) % n;
      e.h[g.node_index(i, j)] += g0;
      e.v[g.node_index(ip, j)] += g1;
      e.h[g.node_index(i, jp)] -= g2;
      e.v[g.node_index(i, j)] -= g3;
    }
  return e;
}

EdgeFlux rot_fluxes(const DiscreteField& s) {
  const Grid& g = s.grid();
  const int n = g.n();
  EdgeFlux e{std::vector<double>(g.node_count()), std::vector<double>(g.node_count())};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double sc = s[g.cell_index(i, j)];
      e.h[g.node_index(i, j)] = sc - s[g.cell_index(i, (j + n - 1) % n)];
      e.v[g.node_index(i, j)] = -(sc - s[g.cell_index((i + n - 1) % n, j)]);
    }
  return e;
}

namespace {

// Mean-zero periodic solution of the five-point equation lap5 s = rhs.
std::vector<double> periodic_poisson5(int n, const std::vector<double>& rhs) {
  const int nh = n / 2 + 1;
  std::vector<double> in = rhs, out(rhs.size());
  fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(n) * nh);
  fftw_plan fwd = fftw_plan_dft_r2c_2d(n, n, in.data(), spec, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  constexpr double two_pi = 6.283185307179586476925;
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < nh; ++kx) {
      fftw_complex& z = spec[static_cast<std::size_t>(ky) * nh + kx];
      const double lam = 2 * std::cos(two_pi * kx / n) + 2 * std::cos(two_pi * ky / n) - 4;
      if (kx == 0 && ky == 0) {
        z[0] = z[1] = 0;
      } else {
        z[0] /= lam;
        z[1] /= lam;
      }
    }
  fftw_plan bwd = fftw_plan_dft_c2r_2d(n, n, spec, out.data(), FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);
  fftw_free(spec);
  const double scale = 1.0 / (static_cast<double>(n) * n);
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace

DiscreteField compute_sigma(const DiscreteField& q) {
  const Grid& g = q.grid();
  const EdgeFlux e = edge_fluxes(q);
  const int n = g.n();
  std::vector<double> circ(g.cell_count());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1) % n, jp = (j + 1) % n;
      circ[g.cell_index(i, j)] = e.h[g.node_index(i, jp)] + e.v[g.node_index(i, j)] -
                                 e.h[g.node_index(i, j)] - e.v[g.node_index(ip, j)];
    }
  return DiscreteField(g, Rank::scalar, Location::cell, periodic_poisson5(n, circ));
}

SigmaCheck check_sigma(const DiscreteField& q, const DiscreteField& s, double scale) {
  const EdgeFlux e = edge_fluxes(q), r = rot_fluxes(s);
  double num = 0, den = 0, mh = 0, mv = 0;
  for (std::size_t k = 0; k < e.h.size(); ++k) {
    num += (e.h[k] - r.h[k]) * (e.h[k] - r.h[k]) + (e.v[k] - r.v[k]) * (e.v[k] - r.v[k]);
    den += e.h[k] * e.h[k] + e.v[k] * e.v[k];
    mh += e.h[k];
    mv += e.v[k];
  }
  SigmaCheck out;
  den = std::max(den, scale * scale * static_cast<double>(2 * e.h.size()));
  out.relative_error = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  out.harmonic_part = (std::abs(mh) + std::abs(mv)) / static_cast<double>(e.h.size());
  return out;
}

CorrectorSet compute_correctors(const CoefficientField& a, const SolveOptions& opts) {
  if (!a.grid.periodic()) throw DomainError("compute_correctors: grid must be periodic");
  CorrectorSet c;
  c.grid = a.grid;
  const DiscreteOperator op(a);
  c.phi = compute_phi(op, opts, &c.reports);
  compute_ahom_and_flux(a, c.phi, c.a_hom, c.q);
  for (int i = 0; i < 2; ++i) c.s[i] = compute_sigma(c.q[i]);
  return c;
}

double corrector_size(const CorrectorSet& c, double R) {
  const auto cells = cells_in_ball(c.grid, Ball{R});
  const double m = mean_square(c.phi[0], cells) + mean_square(c.phi[1], cells) +
                   2 * (mean_square(c.s[0], cells) + mean_square(c.s[1], cells));
  return std::sqrt(m) / R;
}

SublinearityProfile sublinearity_profile(const CorrectorSet& c) {
  SublinearityProfile p;
  p.truncation_radius = c.grid.n() / 4.0;
  for (double r = 1; r <= p.truncation_radius; r *= 2) {
    p.radii.push_back(r);
    p.raw.push_back(corrector_size(c, r));
  }
  const std::size_t m = p.radii.size();
  p.eps.assign(m, 0.0);
  double run = 0;
  for (std::size_t k = m; k-- > 0;) {
    run = std::max(run, p.raw[k]);
    p.eps[k] = run;
  }
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0;
    for (std::size_t l = 0; l < m; ++l) s += std::min(1.0, 2 * p.radii[l] / p.radii[k]) * p.eps[l];
    p.eps2.push_back(s);
  }
  return p;
}

double eps_at(const CorrectorSet& c, double r) {
  double e = corrector_size(c, r);
  const double top = c.grid.n() / 4.0;
  for (double R = 1; R <= top; R *= 2)
    if (R >= r) e = std::max(e, corrector_size(c, R));
  return e;
}

void write_corrector_set(const CorrectorSet& c, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < 2; ++i) {
    serialize_field(c.phi[i], fmt::format("{}/phi_{}.hlf", dir, i + 1));
    serialize_field(c.q[i], fmt::format("{}/q_{}.hlf", dir, i + 1));
  }
  serialize_field(c.sigma_field(), dir + "/sigma.hlf");
  std::ofstream out(dir + "/correctors.txt");
  out << fmt::format("N = {}\n", c.grid.n());
  out << fmt::format("a_hom_11 = {:.17g}\na_hom_12 = {:.17g}\na_hom_21 = {:.17g}\na_hom_22 = {:.17g}\n",
                     c.a_hom[0], c.a_hom[1], c.a_hom[2], c.a_hom[3]);
  for (std::size_t k = 0; k < c.reports.size(); ++k)
    out << fmt::format("solve_{}_iterations = {}\nsolve_{}_residual = {:.3e}\n", k + 1,
                       c.reports[k].iterations, k + 1, c.reports[k].residual);
}

}  // namespace homog
