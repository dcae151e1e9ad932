#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homoglab/field.hpp"
#include "homoglab/poly.hpp"

namespace homog {

/// Corrected polynomials as node functions on a common grid, with the
/// polynomial each one corrects and its degree.
struct CorrectedBasis {
  Grid grid;
  std::vector<DiscreteField> members;
  std::vector<int> degree;
  std::vector<Polynomial> poly;

  void add(DiscreteField u, int deg, Polynomial p);
  std::size_t size() const { return members.size(); }
  int max_degree() const;
};

/// Gauss-point L2 data over B_r: G = avg grad b_j . grad b_l, h = avg grad b_j . grad u,
/// energy = avg |grad u|^2. Members of degree above max_degree (when >= 0) are skipped.
struct GramData {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  double energy = 0;
  std::vector<int> used;  // member indices
};
GramData gram_data(const DiscreteField* u, const CorrectedBasis& basis, double r, int max_degree = -1);

struct ExcessOptions {
  int max_degree = -1;          // restrict the competitors to degree <= max_degree
  double max_condition = 1e12;  // of the diagonally scaled Gram matrix
};

struct ExcessResult {
  double radius = 0;
  double value = 0;       // avg_{B_r} |grad u - sum c_j grad b_j|^2 at the minimizer
  double energy = 0;      // avg_{B_r} |grad u|^2
  double normalized = 0;  // value / energy
  double condition = 0;
  bool fallback = false;  // eigen-decomposition solve used
  Eigen::VectorXd coeff;  // one entry per basis member (zero when skipped)
  std::vector<Polynomial> minimizer;  // sum of c_j P_j split by degree, index = degree
};

ExcessResult excess_k(const DiscreteField& u, double r, const CorrectedBasis& basis,
                      const ExcessOptions& opts = {});
/// avg_{B_r} |grad u - sum c_j grad b_j|^2 for given coefficients.
double excess_objective(const DiscreteField& u, double r, const CorrectedBasis& basis,
                        const Eigen::VectorXd& coeff);
/// max over Gauss points in B_r of |grad u - sum c_j grad b_j|, divided by max |grad u|.
double pointwise_deviation(const DiscreteField& u, double r, const CorrectedBasis& basis,
                           const Eigen::VectorXd& coeff);
/// u - sum c_j b_j.
DiscreteField subtract_members(const DiscreteField& u, const CorrectedBasis& basis,
                               const Eigen::VectorXd& coeff, int max_degree = -1);

/// avg_{B_r} |grad u|^2 with Gauss quadrature.
double gradient_energy(const DiscreteField& u, double r);

/// Smallest eigenvalue of the Gram matrix over B_r after scaling member j by
/// r^{-(deg_j - 1)} / ||P_j||.
double gram_min_eigenvalue(const CorrectedBasis& basis, double r, int max_degree = -1);
Eigen::MatrixXd scaled_gram(const CorrectedBasis& basis, double r, int max_degree = -1);

struct DecayFit {
  double slope = 0;
  double intercept = 0;
  double residual = 0;      // rms deviation in log space
  double slope_stderr = 0;  // standard error of the slope
  int points = 0;
  bool flagged = false;     // zero excess values were excluded
  std::vector<double> excluded;
};
DecayFit decay_fit(const std::vector<double>& radii, const std::vector<double>& values,
                   double r_min, double r_max);

struct ExcessReport {
  std::vector<double> radii;
  std::vector<double> excess;
  std::vector<double> normalized;
  std::vector<double> gram_min_eig;
  std::vector<Eigen::VectorXd> coeff;
  std::vector<std::vector<Polynomial>> minimizer;
  DecayFit fit;
};
ExcessReport excess_report(const DiscreteField& u, const CorrectedBasis& basis,
                           const std::vector<double>& radii, const ExcessOptions& opts = {});
/// Dyadic radii lo, 2 lo, ... <= hi.
std::vector<double> dyadic_radii(double lo, double hi);

/// CSV with radius, excess, gram_min_eig and one column per basis coefficient.
/// Provenance pairs are appended as constant columns on every row.
std::string excess_csv(const ExcessReport& rep,
                       const std::vector<std::pair<std::string, std::string>>& provenance, bool header);
void write_excess_csv(const ExcessReport& rep, const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& provenance = {});
std::string fit_summary(const DecayFit& fit, double r_min, double r_max);

}  // namespace homog
