#pragma once

#include <array>
#include <string>
#include <vector>

#include "homoglab/coeff.hpp"
#include "homoglab/field.hpp"
#include "homoglab/operator.hpp"
#include "homoglab/solver.hpp"

namespace homog {

/// First-order corrector package on the torus.
///
/// sigma is cell-centered and stored antisymmetric: in d = 2 each sigma_i is
/// determined by one stream function s_i with sigma_i21 = s_i = -sigma_i12.
struct CorrectorSet {
  Grid grid;                         // periodic
  std::array<DiscreteField, 2> phi;  // node scalars, mean zero
  std::array<DiscreteField, 2> q;    // Gauss-point vectors, mean zero
  std::array<DiscreteField, 2> s;    // cell scalars (stream functions)
  Tensor2 a_hom{};
  std::vector<SolveReport> reports;

  /// sigma_ijk at cell c (indices 0-based).
  double sigma(int i, int j, int k, std::size_t c) const {
    if (j == k) return 0.0;
    return (j == 1 ? 1.0 : -1.0) * s[i][c];
  }
  /// Full tensor3 cell field, component index i*4 + j*2 + k.
  DiscreteField sigma_field() const;
};

/// phi_i solves A phi_i = div(a e_i), mean zero.
std::array<DiscreteField, 2> compute_phi(const DiscreteOperator& op, const SolveOptions& opts = {},
                                         std::vector<SolveReport>* reports = nullptr);

/// a_hom e_i = torus average of a(e_i + grad phi_i); q_i = a(e_i + grad phi_i) - a_hom e_i.
void compute_ahom_and_flux(const CoefficientField& a, const std::array<DiscreteField, 2>& phi,
                           Tensor2& a_hom, std::array<DiscreteField, 2>& q);

/// Discrete edge fluxes of a Gauss-point vector field: h[i,j] along the edge
/// (i,j)->(i+1,j), v[i,j] along (i,j)->(i,j+1). Their node divergence equals
/// discrete_divergence(q), so h and v approximate -q_x and -q_y.
struct EdgeFlux {
  std::vector<double> h, v;
};
EdgeFlux edge_fluxes(const DiscreteField& q);

/// Edge fluxes of the rotated gradient (-d2 s, d1 s) of a cell potential.
EdgeFlux rot_fluxes(const DiscreteField& s);

/// Stream function s with rot s = q in the edge-flux sense (periodic
/// Poisson problem with the five-point Laplacian, mean zero).
DiscreteField compute_sigma(const DiscreteField& q);

struct SigmaCheck {
  double relative_error = 0;   // || rot s - flux(q) || / max(|| flux(q) ||, scale * sqrt(#edges))
  double harmonic_part = 0;    // mean edge flux (not representable by rot)
};
/// `scale` floors the flux norm per edge; a fluctuation that vanishes
/// identically (laminate across the layers) is then measured against it.
SigmaCheck check_sigma(const DiscreteField& q, const DiscreteField& s, double scale = 0);

CorrectorSet compute_correctors(const CoefficientField& a, const SolveOptions& opts = {});

struct SublinearityProfile {
  std::vector<double> radii;  // 2^m up to N/4
  std::vector<double> eps;    // eps_r
  std::vector<double> eps2;   // eps_{2,r}
  std::vector<double> raw;    // R^-1 (avg_{B_R} |phi|^2 + |sigma|^2)^(1/2)
  double truncation_radius = 0;
};

/// R^-1 (avg_{B_R} |phi|^2 + |sigma|^2)^(1/2) for one radius.
double corrector_size(const CorrectorSet& c, double R);
SublinearityProfile sublinearity_profile(const CorrectorSet& c);
/// eps_r for an arbitrary radius: sup over r and the dyadic radii in [r, N/4].
double eps_at(const CorrectorSet& c, double r);

/// Writes phi_i, q_i, sigma and a manifest with a_hom to a directory.
void write_corrector_set(const CorrectorSet& c, const std::string& dir);

}  // namespace homog
