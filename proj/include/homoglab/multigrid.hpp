#pragma once

#include <Eigen/Dense>
#include <vector>

#include "homoglab/kernels.hpp"

namespace homog {

struct MultigridOptions {
  int max_levels = 24;  // 2 gives a two-grid method
  int pre_sweeps = 2;
  int post_sweeps = 2;
};

/// Galerkin geometric multigrid for a nine-point system whose fixed rows
/// are identity rows with eliminated couplings. Bilinear prolongation with
/// the fixed fine nodes zeroed, coarse operators by probing, four-colour
/// symmetric Gauss-Seidel, dense direct solve on the coarsest level.
/// One V-cycle from a zero guess is a symmetric preconditioner when the
/// system is symmetric.
class Multigrid {
 public:
  Multigrid(const Stencil9& system, std::vector<unsigned char> fixed,
            const MultigridOptions& opts = {});

  /// z = M^-1 r
  void precondition(const double* r, double* z) const;
  int levels() const { return static_cast<int>(levels_.size()); }
  const Stencil9& level_operator(int l) const { return levels_[l].a; }

 private:
  struct Level {
    Stencil9 a;
    std::vector<unsigned char> fixed;
    mutable std::vector<double> x, b, r;
  };

  void prolong_add(const Level& coarse, const Level& fine, const double* xc, double* xf) const;
  void restrict_to(const Level& fine, const Level& coarse, const double* rf, double* rc) const;
  Stencil9 galerkin(const Level& fine, const Level& coarse) const;
  void cycle(std::size_t l) const;

  MultigridOptions opts_;
  std::vector<Level> levels_;
  Eigen::MatrixXd coarse_inverse_;
};

}  // namespace homog
