#include "homoglab/coeff.hpp"

#include <fftw3.h>

#include <cmath>
#include <random>

#include "homoglab/errors.hpp"

namespace homog {

bool CoefficientField::symmetric() const {
  for (const auto& t : a)
    if (t[1] != t[2]) return false;
  return true;
}

namespace {

// Eigenvalues of the symmetric part and the largest singular value of a 2x2 tensor.
void tensor_spectrum(const Tensor2& t, double& sym_min, double& op_norm) {
  const double s11 = t[0], s22 = t[3], s12 = 0.5 * (t[1] + t[2]);
  const double mid = 0.5 * (s11 + s22);
  const double rad = std::hypot(0.5 * (s11 - s22), s12);
  sym_min = mid - rad;
  // Singular values of t from the eigenvalues of t^T t.
  const double p = t[0] * t[0] + t[2] * t[2];
  const double q = t[1] * t[1] + t[3] * t[3];
  const double r = t[0] * t[1] + t[2] * t[3];
  op_norm = std::sqrt(0.5 * (p + q) + std::hypot(0.5 * (p - q), r));
}

}  // namespace

EllipticityReport check_ellipticity(const CoefficientField& a, int samples, std::uint64_t seed) {
  EllipticityReport rep;
  rep.min_margin = INFINITY;
  rep.min_sym_eig = INFINITY;
  for (const auto& t : a.a) {
    double lo, nrm;
    tensor_spectrum(t, lo, nrm);
    rep.min_sym_eig = std::min(rep.min_sym_eig, lo);
    rep.max_op_norm = std::max(rep.max_op_norm, nrm);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> cell(0, a.a.size() - 1);
  std::normal_distribution<double> nd;
  for (int s = 0; s < samples; ++s) {
    const Tensor2& t = a.a[cell(rng)];
    const double x = nd(rng), y = nd(rng);
    const double n2 = x * x + y * y;
    if (n2 == 0) continue;
    const double ax = t[0] * x + t[1] * y, ay = t[2] * x + t[3] * y;
    rep.min_margin = std::min(rep.min_margin, (x * ax + y * ay - a.lambda * n2) / n2);
    rep.max_norm = std::max(rep.max_norm, std::sqrt((ax * ax + ay * ay) / n2));
  }
  constexpr double tol = 1e-12;
  rep.ok = rep.min_margin >= -tol && rep.max_norm <= 1 + tol &&
           rep.min_sym_eig >= a.lambda - tol && rep.max_op_norm <= 1 + tol;
  return rep;
}

CoefficientField constant_field(const Grid& grid, const Tensor2& t, double lambda) {
  CoefficientField f{grid, std::vector<Tensor2>(grid.cell_count(), t), lambda};
  if (!check_ellipticity(f, 16).ok)
    throw ParameterError("constant_field: tensor is not lambda-elliptic with |a| <= 1");
  return f;
}

CoefficientField laminate_field(const Grid& grid, const std::vector<double>& profile,
                                double lambda) {
  const int n = grid.n();
  if (static_cast<int>(profile.size()) != n)
    throw ParameterError("laminate_field: profile length must equal N");
  for (double v : profile)
    if (!(v >= lambda && v <= 1.0)) throw ParameterError("laminate_field: profile outside [lambda, 1]");
  CoefficientField f{grid, std::vector<Tensor2>(grid.cell_count()), lambda};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) f[grid.cell_index(i, j)] = {profile[i], 0, 0, profile[i]};
  return f;
}

std::vector<double> two_phase_profile(int n, int period, double lo, double hi) {
  if (period < 2 || period % 2 != 0 || n % period != 0)
    throw ParameterError("two_phase_profile: period must be even and divide N");
  std::vector<double> p(n);
  for (int i = 0; i < n; ++i) p[i] = (i % period) < period / 2 ? lo : hi;
  return p;
}

CoefficientField checkerboard_field(const Grid& grid, int period, double lo, double hi,
                                    double lambda) {
  const int n = grid.n();
  if (period < 2 || period % 2 != 0 || n % period != 0)
    throw ParameterError("checkerboard_field: period must be even and divide N");
  if (!(lo >= lambda && hi <= 1.0 && lo <= hi))
    throw ParameterError("checkerboard_field: phases outside [lambda, 1]");
  CoefficientField f{grid, std::vector<Tensor2>(grid.cell_count()), lambda};
  const int h = period / 2;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = ((i / h) + (j / h)) % 2 == 0 ? lo : hi;
      f[grid.cell_index(i, j)] = {v, 0, 0, v};
    }
  return f;
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

DiscreteField gaussian_raw(const Grid& grid, double beta, std::uint64_t seed) {
  if (!(beta > 0)) throw ParameterError("gaussian_field: beta must be positive");
  if (!(beta < grid.dim()))
    throw ParameterError("gaussian_field: beta must be below the dimension for a power-law spectrum");
  if (!grid.periodic()) throw ParameterError("gaussian_field: grid must be periodic");
  const int n = grid.n();
  const int nh = n / 2 + 1;
  std::vector<double> w(grid.cell_count());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (double& v : w) v = nd(rng);

  fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(n) * nh);
  fftw_plan fwd = fftw_plan_dft_r2c_2d(n, n, w.data(), spec, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);

  constexpr double two_pi = 6.283185307179586476925;
  // The singular zero mode receives the power of the disc of equal area
  // below the first torus mode.
  const double h = two_pi / n;
  const double kstar = h / std::sqrt(two_pi / 2);
  const double zero_mode = two_pi * std::pow(kstar, beta) / beta / (h * h);
  auto power = [&](int kx, int ky) {
    if (kx == 0 && ky == 0) return zero_mode;
    const double k = h * std::hypot(static_cast<double>(kx), static_cast<double>(ky));
    return std::pow(k, beta - 2.0);
  };
  double total = 0;
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < n; ++kx) {
      const int fx = kx <= n / 2 ? kx : kx - n, fy = ky <= n / 2 ? ky : ky - n;
      total += power(fx, fy);
    }
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < nh; ++kx) {
      const int fy = ky <= n / 2 ? ky : ky - n;
      const double s = std::sqrt(power(kx, fy));
      fftw_complex& z = spec[static_cast<std::size_t>(ky) * nh + kx];
      z[0] *= s;
      z[1] *= s;
    }
  DiscreteField out(grid, Rank::scalar, Location::cell);
  fftw_plan bwd = fftw_plan_dft_c2r_2d(n, n, spec, out.data(), FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);
  fftw_free(spec);
  // E|w_hat|^2 = n^2, so the unnormalized inverse has variance n^2 * total.
  out *= 1.0 / (n * std::sqrt(total));
  return out;
}

CoefficientField clamp_to_elliptic(const DiscreteField& raw, double lambda, bool anisotropic) {
  if (!(lambda > 0 && lambda <= 1)) throw ParameterError("clamp_to_elliptic: lambda must be in (0, 1]");
  if (raw.rank() != Rank::scalar || raw.location() != Location::cell)
    throw DomainError("clamp_to_elliptic: expects a cell scalar");
  CoefficientField f{raw.grid(), std::vector<Tensor2>(raw.grid().cell_count()), lambda};
  for (std::size_t c = 0; c < f.a.size(); ++c) {
    const double a1 = lambda + (1 - lambda) * sigmoid(raw[c]);
    const double a2 = anisotropic ? lambda + (1 - lambda) * sigmoid(-raw[c]) : a1;
    f[c] = {a1, 0, 0, a2};
  }
  return f;
}

CoefficientField gaussian_field(const Grid& grid, double beta, double lambda, std::uint64_t seed,
                                bool anisotropic) {
  return clamp_to_elliptic(gaussian_raw(grid, beta, seed), lambda, anisotropic);
}

namespace {

Tensor2 meyers_tensor(double alpha, double x, double y) {
  const double r2 = x * x + y * y;
  const double a2 = alpha * alpha;
  if (r2 == 0) return {a2, 0, 0, a2};
  const double cx = x * x / r2, cy = y * y / r2, cxy = x * y / r2;
  return {cx + a2 * (1 - cx), (1 - a2) * cxy, (1 - a2) * cxy, cy + a2 * (1 - cy)};
}

// Analytic gradient of r^alpha cos(theta) = x r^(alpha-1).
std::array<double, 2> meyers_u0_gradient(double alpha, double x, double y) {
  const double r2 = x * x + y * y;
  const double ra = std::pow(r2, 0.5 * (alpha - 1));
  const double rb = (alpha - 1) * std::pow(r2, 0.5 * (alpha - 3));
  return {ra + rb * x * x, rb * x * y};
}

}  // namespace

double meyers_flux_divergence(double alpha, double x, double y, double h) {
  auto flux = [&](double px, double py) {
    const Tensor2 t = meyers_tensor(alpha, px, py);
    const auto g = meyers_u0_gradient(alpha, px, py);
    return std::array<double, 2>{t[0] * g[0] + t[1] * g[1], t[2] * g[0] + t[3] * g[1]};
  };
  return (flux(x + h, y)[0] - flux(x - h, y)[0]) / (2 * h) +
         (flux(x, y + h)[1] - flux(x, y - h)[1]) / (2 * h);
}

MeyersField meyers_field(const Grid& grid, double alpha) {
  if (!(alpha > 0.2 && alpha < 0.9)) throw ParameterError("meyers_field: alpha must lie in (0.2, 0.9)");
  if (grid.periodic()) throw ParameterError("meyers_field: grid must be a box");
  // The flux of r^alpha cos(theta) must be divergence free for this eigenpair.
  for (int s = 0; s < 16; ++s) {
    const double th = 0.37 + 0.41 * s, r = 2.0 + 3.0 * s;
    const double x = r * std::cos(th), y = r * std::sin(th);
    const double scale = alpha * std::pow(r, alpha - 2);
    if (std::abs(meyers_flux_divergence(alpha, x, y)) > 1e-6 * scale)
      throw NumericalError("meyers_field: reference solution is not a-harmonic");
  }
  MeyersField out;
  out.alpha = alpha;
  out.a = CoefficientField{grid, std::vector<Tensor2>(grid.cell_count()), alpha * alpha};
  const int n = grid.n();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto c = grid.cell_center(i, j);
      const bool origin = std::abs(c[0]) < 1 && std::abs(c[1]) < 1;
      out.a[grid.cell_index(i, j)] = origin ? meyers_tensor(alpha, 0, 0) : meyers_tensor(alpha, c[0], c[1]);
    }
  out.u0 = sample_nodes(grid, [alpha](double x, double y) {
    const double r2 = x * x + y * y;
    return r2 == 0 ? 0.0 : x * std::pow(r2, 0.5 * (alpha - 1));
  });
  return out;
}

namespace {

double smootherstep(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  return t * t * t * (t * (6 * t - 15) + 10);
}

}  // namespace

CoefficientField smooth_inside_unit_ball(const CoefficientField& a0, double rho) {
  const Grid& g = a0.grid;
  if (!(rho > 0) || rho >= g.n() / 4.0) throw ParameterError("smooth_inside_unit_ball: rho must lie in (0, N/4)");
  CoefficientField out = a0;
  const double c = 0.5 * (1 + a0.lambda);
  const int n = g.n();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto x = g.cell_center(i, j);
      const double r = std::hypot(x[0], x[1]);
      if (r >= rho) continue;
      const double eta = smootherstep(2 * (r / rho - 0.5));
      Tensor2& t = out[g.cell_index(i, j)];
      const Tensor2 src = a0[g.cell_index(i, j)];
      for (int k = 0; k < 4; ++k) t[k] = eta * src[k] + (1 - eta) * ((k == 0 || k == 3) ? c : 0.0);
    }
  return out;
}

double smoothing_second_derivative_bound(double alpha, double rho) {
  // |s'| <= 15/8 and |s''| <= 10/sqrt(3) for the quintic; eta(x) = s(2|x|/rho - 1)
  // is supported on |x| >= rho/2, where x^ (x) x^ has first and second
  // derivatives bounded by 1/|x| and 3/|x|^2 entrywise.
  const double d1 = 2 * (15.0 / 8.0) / rho;
  const double d2 = 4 * (10.0 / std::sqrt(3.0)) / (rho * rho) + d1 / (rho / 2);
  const double amp = 1 - alpha * alpha;
  return amp * (0.5 * d2 + 2 * d1 * (2 / rho) + 3 * 4 / (rho * rho));
}

}  // namespace homog
