#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "homoglab/field.hpp"
#include "homoglab/grid.hpp"

namespace homog {

/// Row-major 2x2 tensor (a11, a12, a21, a22).
using Tensor2 = std::array<double, 4>;

/// Per-cell elliptic tensor field with ellipticity constant lambda:
/// lambda |xi|^2 <= xi . a xi and |a xi| <= |xi| for every cell.
struct CoefficientField {
  Grid grid;
  std::vector<Tensor2> a;
  double lambda = 1.0;

  const Tensor2& operator[](std::size_t c) const { return a[c]; }
  Tensor2& operator[](std::size_t c) { return a[c]; }
  bool symmetric() const;
  CoefficientField with_topology(Topology t) const {
    CoefficientField out = *this;
    out.grid = grid.with_topology(t);
    return out;
  }
};

struct EllipticityReport {
  double min_margin = 0;  // min over samples of (xi.a xi - lambda |xi|^2)/|xi|^2
  double max_norm = 0;    // max over samples of |a xi|/|xi|
  double min_sym_eig = 0; // smallest eigenvalue of the symmetric parts
  double max_op_norm = 0; // largest singular value
  bool ok = false;
};

/// Random (cell, xi) sampling plus exact 2x2 spectra of every cell.
EllipticityReport check_ellipticity(const CoefficientField& a, int samples = 10000,
                                    std::uint64_t seed = 1);

CoefficientField constant_field(const Grid& grid, const Tensor2& t, double lambda);

/// a = alpha(x1) Id with alpha given per cell column.
CoefficientField laminate_field(const Grid& grid, const std::vector<double>& profile,
                                double lambda);
/// Equal-volume two-phase profile: lo on the first half of each period, hi on the second.
std::vector<double> two_phase_profile(int n, int period, double lo, double hi);
/// Two-phase checkerboard with square tiles of side period/2.
CoefficientField checkerboard_field(const Grid& grid, int period, double lo, double hi,
                                    double lambda);

/// Logistic sigmoid and its Lipschitz constant.
double sigmoid(double t);
inline constexpr double kSigmoidLipschitz = 0.25;

/// Centered unit-variance Gaussian cell field with power spectrum |k|^(beta-2);
/// the real-space covariance then decays like |x|^(-beta) for 0 < beta < 2.
DiscreteField gaussian_raw(const Grid& grid, double beta, std::uint64_t seed);

/// a = (lambda + (1-lambda) s(raw)) Id, or diag(s(raw), s(-raw)) analogues
/// when anisotropic.
CoefficientField clamp_to_elliptic(const DiscreteField& raw, double lambda,
                                   bool anisotropic = false);

CoefficientField gaussian_field(const Grid& grid, double beta, double lambda,
                                std::uint64_t seed, bool anisotropic = false);

struct MeyersField {
  CoefficientField a;  // lambda = alpha^2
  DiscreteField u0;    // r^alpha cos(theta) on nodes
  double alpha = 0.5;
};

/// Radially homogeneous field with eigenpair (radial 1, tangential alpha^2).
/// The four cells touching the origin take alpha^2 Id.
MeyersField meyers_field(const Grid& grid, double alpha);

/// Continuum flux divergence of a0 grad(u0) at x, by central differences of
/// the analytic flux. Used as the pre-build check of meyers_field.
double meyers_flux_divergence(double alpha, double x, double y, double h = 1e-4);

/// a = eta(|x|/rho) a0 + (1-eta) c Id with c = (1+lambda)/2 and a quintic
/// smootherstep eta switching on [1/2, 1]; a0 is copied exactly outside B_rho.
CoefficientField smooth_inside_unit_ball(const CoefficientField& a0, double rho = 4.0);

/// Bound on the second derivatives of the smoothed tensor entries.
double smoothing_second_derivative_bound(double alpha, double rho);

}  // namespace homog
