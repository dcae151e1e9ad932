#pragma once

#include <vector>

#include "homoglab/coeff.hpp"
#include "homoglab/field.hpp"
#include "homoglab/kernels.hpp"

namespace homog {

enum class Boundary { dirichlet, periodic };

/// Element stiffness of the unit cell for tensor t: K[m][n] = int grad(phi_m) . t grad(phi_n),
/// local nodes ordered (0,0), (1,0), (0,1), (1,1).
std::array<std::array<double, 4>, 4> element_stiffness(const Tensor2& t);

/// Assembled bilinear form (v, u) -> sum_cells int grad v . a grad u as a nine-point
/// node stencil. On a box grid the boundary rows hold the natural (one-sided)
/// contributions; Dirichlet conditions are imposed by the solvers.
class DiscreteOperator {
 public:
  explicit DiscreteOperator(const CoefficientField& a);

  const Grid& grid() const { return a_.grid; }
  const CoefficientField& coefficients() const { return a_; }
  const Stencil9& stencil() const { return s_; }
  Boundary boundary() const { return grid().periodic() ? Boundary::periodic : Boundary::dirichlet; }
  bool symmetric() const { return symmetric_; }

  /// Node functional A u (equal to -div(a grad u)).
  DiscreteField apply(const DiscreteField& u) const;
  /// |A| |u|, entrywise absolute values; the scale for relative residuals.
  DiscreteField apply_abs(const DiscreteField& u) const;

 private:
  CoefficientField a_;
  Stencil9 s_;
  bool symmetric_ = true;
};

/// a grad u at the Gauss points, for a quadrature gradient field.
DiscreteField apply_tensor(const CoefficientField& a, const DiscreteField& grad);

/// ||A u|| / || |A| |u| || over the nodes where mask is set (all nodes if mask empty).
double relative_residual(const DiscreteOperator& op, const DiscreteField& u,
                         const std::vector<unsigned char>& mask = {});

/// Node mask of |x| < r.
std::vector<unsigned char> node_ball_mask(const Grid& grid, double r);

}  // namespace homog
