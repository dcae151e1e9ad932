#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "homoglab/approximation.hpp"
#include "homoglab/config.hpp"

namespace homog {

/// Coefficient field of a recipe: periodic for the lattice ensembles, a box
/// for the Meyers field (smoothed inside B_rho when rho > 0).
CoefficientField make_field(const FieldRecipe& r, std::uint64_t seed);
/// Tensor cell field holding a, for serialization.
DiscreteField coefficient_tensor_field(const CoefficientField& a);

/// field -> correctors -> psi hierarchy -> corrected basis for one seed.
/// Holds the context by pointer because it references the corrector set.
struct Pipeline {
  std::uint64_t seed = 0;
  CoefficientField a;
  CorrectorSet correctors;
  std::unique_ptr<HigherOrderContext> ctx;
  PsiHierarchy hierarchy;
  CorrectedBasis basis;
  std::vector<StageTime> times;

  Pipeline() = default;
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;
};

SolveOptions solve_options(const ExperimentConfig& c);
PsiOptions psi_options(const ExperimentConfig& c);
/// Psi families and the corrected basis are built up to degree k (0: none).
std::unique_ptr<Pipeline> build_pipeline(const ExperimentConfig& c, std::uint64_t seed, int k);

/// Checks and text outputs of one stage; files are written by the runners
/// into the output directory only.
struct StageResult {
  std::vector<Check> checks;
  std::vector<StageTime> times;
  std::vector<double> eps_radii, eps;
  bool passed() const;
};

/// Residual of every corrected basis member on B_{R/2}, R the built radius.
std::vector<double> member_residuals(const Pipeline& p, double R);

/// avg_{B_1} grad P_j . grad P_l / (sup P_j sup P_l): the constant-coefficient scaled Gram.
Eigen::MatrixXd continuum_gram(const std::vector<Polynomial>& polys);

struct ExcessDecayRun {
  std::uint64_t seed = 0;
  ExcessReport report;
  DecayFit fit;
  double control = 0;  // max normalized excess of a corrected polynomial of degree <= k
};
struct ExcessDecayResult : StageResult {
  std::vector<ExcessDecayRun> runs;
  double mean_slope = 0;
};

struct LiouvilleResult : StageResult {
  int expected = 0;     // 1 + d + sum dim P_kappa^hom
  int family = 0;       // 1 + basis size
  int rank = 0;         // 1 + numerical rank of the scaled Gram
  std::vector<double> residuals;
  std::vector<double> radii, min_eig;
  double reference = 0;  // continuum min eigenvalue of the a_hom basis
  std::vector<Eigen::VectorXd> spectra;
};

struct ApproxRow {
  std::uint64_t seed = 0;
  bool skipped = false;  // eps_R > 1
  ApproximationResult r;
};
struct ApproxLawResult : StageResult {
  std::vector<ApproxRow> rows;
  std::vector<double> spread;  // max/min ratio per seed
  std::vector<double> growth;  // max ratio / ratio at the smallest R, per seed
};

struct CounterexampleResult : StageResult {
  std::vector<double> radii;
  std::vector<double> u0_mean;      // (avg_{B_R} u0^2)^(1/2)
  std::vector<double> w_mean;       // (avg_{B_R} w^2)^(1/2)
  std::vector<double> w_energy;     // int_{B_R} |grad w|^2
  double exponent = 0;              // fitted growth exponent of u0
  double log_a = 0, log_b = 0;      // w_mean ~ a + b log R
  double log_residual = 0;          // max |w_mean - fit| / max w_mean
  double support = 0;               // support radius of the right-hand side
  double residual = 0;              // a-residual of u0 + w outside B_{2 rho}
};

StageResult run_gen_field(const ExperimentConfig& c, const std::string& out);
StageResult run_correctors(const ExperimentConfig& c, const std::string& out);
StageResult run_psi(const ExperimentConfig& c, const std::string& out);
ExcessDecayResult run_excess_decay(const ExperimentConfig& c, const std::string& out = "");
LiouvilleResult run_liouville_dimension(const ExperimentConfig& c, const std::string& out = "");
ApproxLawResult run_approximation_law(const ExperimentConfig& c, const std::string& out = "");
CounterexampleResult run_counterexample(const ExperimentConfig& c, const std::string& out = "");

}  // namespace homog
