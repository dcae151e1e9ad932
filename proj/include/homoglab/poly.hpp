#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homoglab/coeff.hpp"
#include "homoglab/field.hpp"

namespace homog {

using MultiIndex = std::vector<int>;

/// Exponents of all monomials of total degree lo..hi in d variables, ordered by
/// degree and then descending lexicographically (x1^2, x1 x2, x2^2, ...).
std::vector<MultiIndex> monomials(int d, int lo, int hi);
/// Number of monomials of exact degree k in d variables.
int homogeneous_dimension(int d, int k);

/// Dense polynomial in d variables with coefficients on every monomial of
/// degree <= degree().
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int dim, int degree);
  Polynomial(int dim, int degree, std::vector<double> coeff);
  static Polynomial monomial(const MultiIndex& alpha, double c = 1.0);
  static Polynomial coordinate(int dim, int i);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  const std::vector<MultiIndex>& exponents() const;
  const std::vector<double>& coeff() const { return coeff_; }
  std::vector<double>& coeff() { return coeff_; }
  double coefficient(const MultiIndex& alpha) const;
  double& coefficient(const MultiIndex& alpha);

  double operator()(const double* x) const;
  double operator()(double x, double y) const;
  void gradient(const double* x, double* g) const;

  Polynomial derivative(int i) const;
  /// Part of exact degree k.
  Polynomial homogeneous_part(int k) const;
  /// Same polynomial with a larger coefficient table.
  Polynomial padded(int degree) const;
  /// Smallest degree holding a nonzero coefficient, or -1 for zero.
  int min_degree() const;
  bool is_homogeneous(int k, double tol = 0.0) const;
  double coefficient_norm() const;
  std::string to_string() const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(double s);

 private:
  int dim_ = 2;
  int degree_ = 0;
  std::vector<double> coeff_{0.0};
};

Polynomial operator+(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a, const Polynomial& b);
Polynomial operator*(double s, Polynomial a);
/// Product of polynomials (degrees add).
Polynomial multiply(const Polynomial& a, const Polynomial& b);

struct PolySpace {
  std::vector<Polynomial> basis;
  bool harmonic = false;
  int degree = 0;
  std::size_t size() const { return basis.size(); }
};

/// Monomial basis of the homogeneous polynomials of degree k.
PolySpace homogeneous_basis(int d, int k);

/// The polynomial A:grad^2 P (degree k - 2).
Polynomial ahom_contraction(const Eigen::MatrixXd& a, const Polynomial& p);
Eigen::MatrixXd to_matrix(const Tensor2& a);

/// Basis of the degree-k homogeneous polynomials with A:grad^2 P = 0,
/// orthonormal for the average over the unit ball. Shape is canonical: each
/// monomial in order is projected on the space and Gram-Schmidt applied.
PolySpace ahom_harmonic_basis(const Eigen::MatrixXd& a, int k);
PolySpace ahom_harmonic_basis(const Tensor2& a, int k);

/// Average of x^alpha over the unit ball.
double ball_moment(const MultiIndex& alpha);
/// Average of P Q over the unit ball.
double ball_inner(const Polynomial& p, const Polynomial& q);

/// sup over the unit ball of |P|, sampled on 512 Halton points inside plus
/// 256 points on the sphere.
double sup_norm_B1(const Polynomial& p);
const std::vector<std::vector<double>>& sup_norm_samples(int d);

/// Node values of P on the grid.
DiscreteField evaluate(const Grid& grid, const Polynomial& p);
/// Gauss-point gradient of the continuum polynomial.
DiscreteField evaluate_gradient(const Grid& grid, const Polynomial& p);

/// Least-squares fit of a degree <= k polynomial to node values inside
/// B_fit_radius; returns the homogeneous parts P_0..P_k.
std::vector<Polynomial> taylor_extract(const DiscreteField& u, int k, double fit_radius,
                                       double max_condition = 1e10);

}  // namespace homog
