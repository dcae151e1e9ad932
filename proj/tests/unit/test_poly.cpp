#include <doctest.h>

#include <cmath>
#include <complex>

#include "homoglab/errors.hpp"
#include "homoglab/poly.hpp"

using namespace homog;

namespace {

// Re and Im of (x1 + i x2)^k by binomial expansion.
std::array<Polynomial, 2> complex_power(int k) {
  std::array<Polynomial, 2> out{Polynomial(2, k), Polynomial(2, k)};
  double binom = 1;
  for (int m = 0; m <= k; ++m) {
    const std::complex<double> im = std::pow(std::complex<double>(0, 1), m);
    out[0].coefficient({k - m, m}) = binom * std::round(im.real());
    out[1].coefficient({k - m, m}) = binom * std::round(im.imag());
    binom = binom * (k - m) / (m + 1);
  }
  return out;
}

double distance_to_span(const Polynomial& p, const PolySpace& s) {
  Polynomial r = p;
  for (const auto& b : s.basis) r -= ball_inner(r, b) * b;
  return std::sqrt(ball_inner(r, r) / ball_inner(p, p));
}

}  // namespace

TEST_CASE("homogeneous monomial bases") {
  const auto b = homogeneous_basis(2, 2);
  REQUIRE(b.size() == 3);
  CHECK(b.basis[0].coefficient({2, 0}) == 1);
  CHECK(b.basis[1].coefficient({1, 1}) == 1);
  CHECK(b.basis[2].coefficient({0, 2}) == 1);
  CHECK(homogeneous_basis(2, 5).size() == 6);
  CHECK(homogeneous_basis(3, 2).size() == 6);
  CHECK(homogeneous_basis(2, 0).size() == 1);
  for (const auto& p : homogeneous_basis(3, 4).basis) CHECK(p.is_homogeneous(4));
  CHECK_THROWS_AS(homogeneous_basis(2, -1), ParameterError);
}

TEST_CASE("polynomial algebra") {
  const Polynomial x = Polynomial::coordinate(2, 0), y = Polynomial::coordinate(2, 1);
  const Polynomial p = multiply(multiply(x, x), y) - 3.0 * multiply(y, y) + x;  // x^2 y - 3 y^2 + x
  CHECK(p(2.0, -1.0) == doctest::Approx(-4 - 3 + 2));
  const Polynomial px = p.derivative(0), py = p.derivative(1);
  CHECK(px(2.0, -1.0) == doctest::Approx(2 * 2 * -1 + 1));
  CHECK(py(2.0, -1.0) == doctest::Approx(4 + 6));
  double g[2];
  const double at[2] = {0.3, 0.7};
  p.gradient(at, g);
  CHECK(g[0] == doctest::Approx(px(at)));
  CHECK(g[1] == doctest::Approx(py(at)));
  CHECK(p.homogeneous_part(3).coefficient({2, 1}) == 1);
  CHECK(p.homogeneous_part(2).coefficient({0, 2}) == -3);
  CHECK(p.min_degree() == 1);
  CHECK_FALSE(p.is_homogeneous(3));
  CHECK(p.padded(6)(0.3, 0.7) == doctest::Approx(p(0.3, 0.7)));
  CHECK(Polynomial(2, 3).min_degree() == -1);
}

TEST_CASE("ball moments") {
  CHECK(ball_moment({0, 0}) == doctest::Approx(1.0));
  CHECK(ball_moment({2, 0}) == doctest::Approx(0.25));
  CHECK(ball_moment({4, 0}) == doctest::Approx(0.125));
  CHECK(ball_moment({2, 2}) == doctest::Approx(1.0 / 24));
  CHECK(ball_moment({1, 2}) == 0.0);
  CHECK(ball_moment({2, 0, 0}) == doctest::Approx(0.2));
  CHECK(ball_moment({0, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("identity-harmonic bases are spanned by complex powers") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  CHECK(ahom_harmonic_basis(id, 0).size() == 1);
  for (int k = 1; k <= 6; ++k) {
    const auto s = ahom_harmonic_basis(id, k);
    REQUIRE(s.size() == 2);
    const auto zk = complex_power(k);
    CHECK(distance_to_span(zk[0], s) <= 1e-12);
    CHECK(distance_to_span(zk[1], s) <= 1e-12);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j)
        CHECK(ball_inner(s.basis[i], s.basis[j]) == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0));
  }
}

TEST_CASE("harmonic bases for general tensors and in three dimensions") {
  Eigen::MatrixXd a(2, 2);
  a << 0.9, 0.3, 0.3, 0.4;
  for (int k = 2; k <= 5; ++k) {
    const auto s = ahom_harmonic_basis(a, k);
    CHECK(s.size() == 2);
    for (const auto& p : s.basis) {
      CHECK(p.is_homogeneous(k, 1e-14));
      for (double c : ahom_contraction(a, p).coeff()) CHECK(std::abs(c) <= 1e-12);
    }
  }
  // generic nonsymmetric tensor: only the symmetric part constrains P
  Eigen::MatrixXd b(2, 2);
  b << 0.9, 0.5, 0.1, 0.4;
  const auto sb = ahom_harmonic_basis(b, 2);
  CHECK(sb.size() == 2);
  for (const auto& p : sb.basis)
    for (double c : ahom_contraction(b, p).coeff()) CHECK(std::abs(c) <= 1e-12);
  const Eigen::MatrixXd id3 = Eigen::MatrixXd::Identity(3, 3);
  for (int k = 0; k <= 4; ++k) CHECK(ahom_harmonic_basis(id3, k).size() == static_cast<std::size_t>(2 * k + 1));
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(ahom_harmonic_basis(bad, 2), PreconditionError);
}

TEST_CASE("identity-harmonic basis of degree two has the canonical shape") {
  const auto s = ahom_harmonic_basis(Tensor2{1, 0, 0, 1}, 2);
  // x1^2 - x2^2 then x1 x2, each normalized
  CHECK(s.basis[0].coefficient({2, 0}) == doctest::Approx(-s.basis[0].coefficient({0, 2})));
  CHECK(std::abs(s.basis[0].coefficient({1, 1})) <= 1e-14);
  CHECK(std::abs(s.basis[1].coefficient({2, 0})) <= 1e-14);
}

TEST_CASE("sup norm on the unit ball") {
  CHECK(sup_norm_B1(Polynomial::coordinate(2, 0)) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(sup_norm_B1(complex_power(2)[0]) == doctest::Approx(1.0).epsilon(1e-3));
  Polynomial c(2, 0);
  c.coeff()[0] = -2.5;
  CHECK(sup_norm_B1(c) == 2.5);
  CHECK(sup_norm_samples(2).size() == 768);
  CHECK(sup_norm_B1(complex_power(5)[1]) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("sup and coefficient norms are equivalent with frozen constants") {
  // max over the orthonormal identity-harmonic basis of sup / coefficient norm,
  // attained by Re or Im of (x1 + i x2)^k
  const double frozen[] = {0, 1.0, 0.70710678118654746, 0.31622776601683794, 0.17677669529663689};
  for (int k = 1; k <= 4; ++k) {
    double worst = 0;
    for (const auto& p : ahom_harmonic_basis(Tensor2{1, 0, 0, 1}, k).basis)
      worst = std::max(worst, sup_norm_B1(p) / p.coefficient_norm());
    CHECK(worst == doctest::Approx(frozen[k]).epsilon(1e-3));
  }
}

TEST_CASE("taylor extraction reproduces polynomials") {
  const Grid g(64, Topology::box);
  const auto z2 = complex_power(2)[0];
  auto parts = taylor_extract(evaluate(g, z2), 2, 12.0);
  REQUIRE(parts.size() == 3);
  for (std::size_t m = 0; m < 3; ++m) CHECK(std::abs(parts[2].coeff()[3 + m] - z2.coeff()[3 + m]) <= 1e-9);
  CHECK(parts[0].coefficient_norm() <= 1e-9);
  CHECK(parts[1].coefficient_norm() <= 1e-9);
  const auto z3 = complex_power(3)[1] + 0.5 * complex_power(1)[0];
  parts = taylor_extract(evaluate(g, z3), 3, 12.0);
  CHECK((parts[3] - z3.homogeneous_part(3)).coefficient_norm() <= 1e-8);
  CHECK((parts[1] - z3.homogeneous_part(1)).coefficient_norm() <= 1e-8);
  CHECK_THROWS_AS(taylor_extract(evaluate(g, z3), 3, 1.2), NumericalError);
}

TEST_CASE("taylor extraction is stable under a higher-order perturbation") {
  const Grid g(64, Topology::box);
  const auto z2 = complex_power(2)[0];
  const double R = 10.0;
  const auto x3 = Polynomial::monomial({3, 0});
  std::array<double, 3> first{};
  for (double delta : {1e-4, 1e-3, 1e-2}) {
    const auto parts = taylor_extract(evaluate(g, z2 + delta * x3), 2, R);
    for (int k = 0; k <= 2; ++k) {
      const double dev = (parts[k] - z2.homogeneous_part(k)).coefficient_norm();
      // a degree-3 term of size delta moves P_k by delta R^{3-k} times O(1)
      CHECK(dev <= 2.0 * delta * std::pow(R, 3 - k));
      if (delta == 1e-4) first[k] = dev;
      else CHECK(dev / delta == doctest::Approx(first[k] / 1e-4).epsilon(1e-6));
    }
  }
}
