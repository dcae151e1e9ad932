#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "homoglab/correctors.hpp"
#include "homoglab/excess.hpp"
#include "homoglab/poly.hpp"
#include "homoglab/solver.hpp"

namespace homog {

/// Correctors of a periodic field moved to the box of the same size, with the
/// operator and the zero-Dirichlet solver shared by every psi solve. Keeps a
/// reference to the corrector set.
class HigherOrderContext {
 public:
  HigherOrderContext(const CoefficientField& a, const CorrectorSet& c, const SolveOptions& opts = {});
  HigherOrderContext(const HigherOrderContext&) = delete;
  HigherOrderContext& operator=(const HigherOrderContext&) = delete;

  const Grid& grid() const { return box_.grid; }
  const CoefficientField& coefficients() const { return box_; }
  const DiscreteOperator& op() const { return *op_; }
  const CorrectorSet& correctors() const { return *c_; }
  const Tensor2& a_hom() const { return c_->a_hom; }
  const SublinearityProfile& sublinearity() const { return profile_; }
  const DiscreteField& phi(int i) const { return phi_[i]; }
  double sigma(int i, int j, int k, std::size_t cell) const { return c_->sigma(i, j, k, cell); }
  const SolveOptions& solve_options() const { return opts_; }

  /// Zero Dirichlet data on the box, mean zero on B_r0.
  DiscreteField solve(const DiscreteField& f, double r0, SolveReport* report = nullptr) const;
  /// P + phi_i d_i P + psi (psi may be empty).
  DiscreteField corrected(const Polynomial& p, const DiscreteField* psi = nullptr) const;
  /// eps_{2,r} from the dyadic profile (largest tabulated radius <= r).
  double eps2(double r) const;
  double eps(double r) const;

 private:
  CoefficientField box_;
  const CorrectorSet* c_;
  std::unique_ptr<DiscreteOperator> op_;
  std::unique_ptr<LinearSolver> solver_;
  std::array<DiscreteField, 2> phi_;
  SublinearityProfile profile_;
  SolveOptions opts_;
};

/// Gauss-point field (phi_i a - sigma_i) grad d_i P on the box.
DiscreteField psi_rhs(const Polynomial& p, const HigherOrderContext& ctx);
/// The same field for P = E_ij x_i x_j written as E_ij [sigma_ij + sigma_ji + a (phi_i e_j + phi_j e_i)].
DiscreteField psi_rhs_symmetric(const Tensor2& E, const HigherOrderContext& ctx);
/// Node functional g = -A (P + phi_i d_i P); A psi = g makes the corrected
/// polynomial discretely a-harmonic. Outer ring rows are zero.
DiscreteField psi_rhs_nodal(const Polynomial& p, const HigherOrderContext& ctx);
/// g restricted to the nodes with inner <= |x| < outer.
DiscreteField truncate_rhs(const DiscreteField& g, double inner, double outer);

struct PsiOptions {
  double r0 = 8.0;
  double r_max = 0.0;     // 0: N/4
  bool doubling = true;   // false: one truncated solve with the rhs cut to B_{r_max}
  bool keep_increments = true;
};

/// r^{-(k-1)}-scaled measurements at the dyadic radii r0 .. r_max.
struct PsiMeasure {
  std::vector<double> radii;
  std::vector<double> values;
  double max_value() const;
};

struct PsiCorrector {
  Polynomial P;
  int degree = 0;
  DiscreteField psi;
  double r0 = 0, R = 0;
  std::vector<double> stage_radii;          // R before each doubling
  std::vector<DiscreteField> increments;    // psi^{2R} - psi^R
  std::vector<SolveReport> reports;
  PsiMeasure initial_ratio;   // avg|grad psi^{r0}|^2 / (||P||^2 r^{2(k-1)} min(1,(r0/r)^2) eps_{r0}^2)
  std::vector<PsiMeasure> increment_ratio;  // r^{-(k-1)} avg|grad inc|^(1/2) / (||P|| eps_{2R}) per stage
  std::vector<double> coefficient_ratio;    // sum R^{2(kappa-1)} ||P_kappa||^2 / avg_{B_R}|grad xi|^2 per stage
  PsiMeasure growth;          // sup_{rho >= r} rho^{-(k-1)} avg_{B_rho}|grad psi|^(1/2)
  PsiMeasure growth_ratio;    // growth / (||P|| eps_{2,r})
};

/// psi for every member of an a_hom-harmonic basis of one degree.
struct PsiFamily {
  int degree = 0;
  PolySpace space;
  std::vector<PsiCorrector> members;
};

/// Families of degrees 2..k; families[kappa - 2] has degree kappa.
struct PsiHierarchy {
  int k = 1;
  std::vector<PsiFamily> families;
  const PsiFamily* family(int degree) const;
};

/// Stage zero: rhs cut to B_r0.
PsiFamily psi_initial(const HigherOrderContext& ctx, const PolySpace& space, const PsiOptions& opts = {});
/// One doubling R -> 2R of every family member.
void psi_double(const HigherOrderContext& ctx, const PsiHierarchy& lower, PsiFamily& fam, double R,
                const PsiOptions& opts = {});
/// The full construction of degree k, given the lower degrees.
PsiFamily build_psi_family(const HigherOrderContext& ctx, const PsiHierarchy& lower, int k,
                           const PsiOptions& opts = {});
PsiHierarchy build_hierarchy(const HigherOrderContext& ctx, int k, const PsiOptions& opts = {});
/// Direct path: one solve with the rhs cut to B_R.
DiscreteField psi_direct(const Polynomial& p, const HigherOrderContext& ctx, double R, double r0 = 8.0);

/// psi_P for P in the span of the family, by linearity.
PsiCorrector psi_for(const Polynomial& p, const PsiFamily& fam);

struct Ck11Result {
  std::vector<Polynomial> P;    // index kappa = 0..k-1, P[0] = 0
  Eigen::VectorXd coeff;        // on the projection basis
  DiscreteField correction;     // sum over kappa <= k-1 of the corrected P_kappa
  double excess = 0;            // normalized order-k excess at r0
  double coefficient_bound = 0; // sum R^{2(kappa-1)} ||P_kappa||^2 / avg_{B_R}|grad u|^2
};

/// Projection basis for order k: degree 1..k-1 members from the hierarchy and
/// the current degree-k family.
CorrectedBasis projection_basis(const HigherOrderContext& ctx, const PsiHierarchy& lower,
                                const PsiFamily* current, int k);
Ck11Result ck11_projection(const DiscreteField& u, int k, const HigherOrderContext& ctx,
                           const CorrectedBasis& basis, double r0, double R);

struct CorrectedFunction {
  std::vector<Polynomial> parts;  // P_kappa, index kappa
  DiscreteField u;
};
/// sum_kappa P_kappa + phi_i d_i P_kappa + psi_{P_kappa}; each P_kappa must be
/// a_hom-harmonic and homogeneous of degree kappa.
CorrectedFunction corrected_polynomial(const std::vector<Polynomial>& parts, const HigherOrderContext& ctx,
                                       const PsiHierarchy& h);
/// Corrected basis of all degrees 1..max_degree (orthonormal harmonic bases).
CorrectedBasis corrected_basis(const HigherOrderContext& ctx, const PsiHierarchy& h, int max_degree);

}  // namespace homog
