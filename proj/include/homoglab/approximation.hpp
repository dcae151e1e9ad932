#pragma once

#include <cstdint>
#include <vector>

#include "homoglab/psi.hpp"

namespace homog {

/// a-harmonic function on the box of op: Dirichlet data
/// sum_{m=1..modes} g_m Re((x1+i x2)/L)^m + h_m Im((x1+i x2)/L)^m with standard
/// normal g, h and L = N/2.
DiscreteField random_a_harmonic(const DiscreteOperator& op, std::uint64_t seed, int modes = 8,
                                const SolveOptions& opts = {});

struct ApproximationOptions {
  int candidates = 8;          // R' candidates evenly spaced in [3R/4, R]
  double residual_tol = 1e-6;  // required relative residual of u on B_R
  SolveOptions solve;
};

struct ApproximationResult {
  double R = 0;
  double R_prime = 0;
  std::vector<double> candidates;
  std::vector<double> boundary_energy;  // R' int_{dB_R'} |grad u|^2 / |B_R'| per candidate
  double boundary_constant = 0;         // chosen boundary energy / energy
  double eps = 0;                       // eps_R
  double rho = 0;                       // boundary-layer width
  double energy = 0;                    // avg_{B_R} |grad u|^2
  double error = 0;                     // avg_{B_R/2} |grad(u - u_hom - phi_i d_i u_hom)|^2
  double ratio = 0;                     // error / (eps^(2/9) energy)
  double energy_constant = 0;           // avg_{B_R/2} |grad u_hom|^2 / energy
  double residual = 0;                  // relative a-residual of u on B_R
  DiscreteField u_hom;
  DiscreteField two_scale;              // u_hom + eta phi_i d_i u_hom
};

/// Cubic smoothstep from 0 at t <= -1 to 1 at t >= 1.
double smoothstep(double t);

/// Node field of d_i u by centered differences (one-sided on the outer ring).
DiscreteField nodal_derivative(const DiscreteField& u, int i);

/// Approximation of an a-harmonic u on B_R by the corrected a_hom-harmonic
/// function with u's trace on a good sphere B_R'.
ApproximationResult homogenized_approximation(const DiscreteField& u, double R,
                                              const HigherOrderContext& ctx,
                                              const ApproximationOptions& opts = {});

}  // namespace homog
