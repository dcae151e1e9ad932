#pragma once

#include <memory>
#include <string>
#include <vector>

#include "homoglab/multigrid.hpp"
#include "homoglab/operator.hpp"

namespace homog {

enum class Preconditioner { none, jacobi, multigrid };
enum class Method { automatic, cg, bicgstab };

struct SolveOptions {
  double tol = 1e-10;  // relative residual on the free rows
  int max_iterations = 5000;
  Preconditioner preconditioner = Preconditioner::multigrid;
  MultigridOptions multigrid;
  Method method = Method::automatic;  // cg for symmetric a, bicgstab otherwise
  bool record_energy = false;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0;
  double wall_seconds = 0;
  bool converged = false;
  std::string method;
  /// Energy functional 1/2 x.Ax - b.x after each iteration (cg with record_energy).
  std::vector<double> energy;
};

/// Reusable solver for one operator and one set of fixed nodes. On a box
/// the outer ring is always fixed; on a periodic grid with no fixed nodes the
/// problem is solved in the mean-zero complement of the constants.
class LinearSolver {
 public:
  LinearSolver(const DiscreteOperator& op, std::vector<unsigned char> fixed,
               const SolveOptions& opts = {});

  /// Solves A u = f on the free nodes with u = g on the fixed ones. Either
  /// field may be empty (zero).
  DiscreteField solve(const DiscreteField& f, const DiscreteField& g, SolveReport* report = nullptr) const;

  const DiscreteOperator& op() const { return *op_; }
  const std::vector<unsigned char>& fixed() const { return fixed_; }
  const SolveOptions& options() const { return opts_; }

 private:
  void precondition(const double* r, double* z) const;
  void project(double* v) const;

  const DiscreteOperator* op_;
  std::vector<unsigned char> fixed_;
  SolveOptions opts_;
  Stencil9 system_;
  bool singular_ = false;
  std::unique_ptr<Multigrid> mg_;
  std::vector<double> inv_diag_;
};

/// Fixed mask holding the outer ring of a box grid (empty ring on a torus).
std::vector<unsigned char> boundary_mask(const Grid& grid);

/// Dirichlet problem A u = f inside, u = g on the box boundary.
DiscreteField solve_dirichlet(const DiscreteOperator& op, const DiscreteField& boundary_values,
                              const DiscreteField& rhs, const SolveOptions& opts = {},
                              SolveReport* report = nullptr);

/// A u = div(F) on the torus, mean zero.
DiscreteField solve_periodic_mean_zero(const DiscreteOperator& op, const DiscreteField& F,
                                       const SolveOptions& opts = {}, SolveReport* report = nullptr);

struct TruncationOptions {
  double box_factor = 4.0;  // box side / support radius
  bool full_box = true;     // solve on the whole grid (needs box_factor * support <= N)
  double r0 = 8.0;          // additive constant: mean zero on B_r0
};

/// Stand-in for the whole-space problem A u = f with compactly supported f:
/// zero Dirichlet data on a centered square. `support_radius` bounds the
/// support of f.
DiscreteField solve_truncated_whole_space(const LinearSolver& solver, const DiscreteField& f,
                                          double r0, SolveReport* report = nullptr);
DiscreteField solve_truncated_whole_space(const DiscreteOperator& op, const DiscreteField& F,
                                          const TruncationOptions& topts = {},
                                          const SolveOptions& opts = {},
                                          SolveReport* report = nullptr);

/// Fixed mask of the truncation square of side `side` (outer ring included).
std::vector<unsigned char> truncation_mask(const Grid& grid, double side);

/// Radius of the smallest origin-centered ball holding the nonzero entries of a node functional
/// or the nonzero cells of a cell/quadrature field.
double support_radius(const DiscreteField& f);

/// Subtracts the mean over B_r so that the field has zero average there.
void normalize_mean_zero(DiscreteField& u, double r);

}  // namespace homog
