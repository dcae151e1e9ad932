#include <doctest.h>

#include <cmath>

#include "homoglab/coeff.hpp"
#include "homoglab/errors.hpp"
#include "homoglab/psi.hpp"
#include "oracles.hpp"

using namespace homog;

namespace {

double max_abs(const DiscreteField& f) {
  double m = 0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const DiscreteField& a, const DiscreteField& b) {
  double m = 0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

struct Setup {
  CoefficientField a;
  CorrectorSet c;
  std::unique_ptr<HigherOrderContext> ctx;
  explicit Setup(CoefficientField f) : a(std::move(f)), c(compute_correctors(a)) {
    ctx = std::make_unique<HigherOrderContext>(a, c);
  }
};

CoefficientField laminate(int n) {
  const Grid g(n, Topology::periodic);
  return laminate_field(g, two_phase_profile(n, 8, 0.25, 1.0), 0.25);
}

}  // namespace

TEST_CASE("constant coefficients: psi vanishes and corrected polynomials are polynomials") {
  Setup s(constant_field(Grid(128, Topology::periodic), {1, 0, 0, 1}, 0.25));
  const auto& ctx = *s.ctx;
  CHECK(max_abs(psi_rhs(ahom_harmonic_basis(ctx.a_hom(), 2).basis[0], ctx)) == 0.0);
  const auto h = build_hierarchy(ctx, 3);
  for (int k = 2; k <= 3; ++k)
    for (const auto& m : h.family(k)->members) {
      CHECK(max_abs(m.psi) <= 1e-10);
      for (const auto& inc : m.increments) CHECK(max_abs(inc) <= 1e-10);
    }
  Polynomial p(2, 2);
  p.coefficient({2, 0}) = 1;
  p.coefficient({0, 2}) = -1;
  const auto cf = corrected_polynomial({Polynomial(2, 0), Polynomial(2, 1), p}, ctx, h);
  CHECK(max_abs_diff(cf.u, evaluate(ctx.grid(), p)) <= 1e-10);
  CHECK(relative_residual(ctx.op(), cf.u, node_ball_mask(ctx.grid(), 60)) <= 1e-11);
}

TEST_CASE("the two forms of the degree-two right-hand side agree") {
  Setup s(gaussian_field(Grid(64, Topology::periodic), 1.0, 0.25, 5));
  const auto& ctx = *s.ctx;
  const Tensor2 E{0.7, -0.2, -0.2, 0.3};
  Polynomial p(2, 2);
  p.coefficient({2, 0}) = E[0];
  p.coefficient({1, 1}) = E[1] + E[2];
  p.coefficient({0, 2}) = E[3];
  const auto F = psi_rhs(p, ctx), G = psi_rhs_symmetric(E, ctx);
  CHECK(max_abs_diff(F, G) <= 1e-12 * std::max(1.0, max_abs(F)));
}

TEST_CASE("laminate right-hand side for x1 x2 matches the one-dimensional fields") {
  const int n = 64;
  std::vector<double> prof = two_phase_profile(n, 8, 0.25, 1.0);
  Setup s(laminate(n));
  const auto& ctx = *s.ctx;
  const auto phi1 = oracle::laminate_phi1(prof);
  const auto s2 = oracle::laminate_sigma(prof);
  const auto F = psi_rhs(Polynomial::monomial({1, 1}), ctx);
  const Grid& g = ctx.grid();
  double err = 0, nrm = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t c = g.cell_index(i, j);
      for (int q = 0; q < 4; ++q) {
        const double xi = gauss_point(q)[0];
        const double ph = (1 - xi) * phi1[i] + xi * phi1[(i + 1) % n];
        const double ref = ph * prof[i] - s2[i];
        err += F[8 * c + 2 * q] * F[8 * c + 2 * q] + std::pow(F[8 * c + 2 * q + 1] - ref, 2);
        nrm += ref * ref;
      }
    }
  CHECK(std::sqrt(err / nrm) <= 1e-6);
}

TEST_CASE("nodal right-hand side and the flux-form divergence") {
  Setup s(gaussian_field(Grid(128, Topology::periodic), 1.0, 0.25, 2));
  const auto& ctx = *s.ctx;
  for (const auto& P : ahom_harmonic_basis(ctx.a_hom(), 2).basis) {
    const auto gn = psi_rhs_nodal(P, ctx);
    const auto gd = discrete_divergence(psi_rhs(P, ctx));
    const auto m = node_ball_mask(ctx.grid(), 30);
    double num = 0, den = 0;
    for (std::size_t k = 0; k < m.size(); ++k)
      if (m[k]) {
        num += std::pow(gn[k] - gd[k], 2);
        den += gn[k] * gn[k];
      }
    // two discretizations of one continuum right-hand side
    MESSAGE("relative difference " << std::sqrt(num / den));
    CHECK(std::sqrt(num / den) < 0.5);
  }
}

TEST_CASE("initial stage: linearity and decay of averages outside the support") {
  Setup s(gaussian_field(Grid(128, Topology::periodic), 1.0, 0.25, 3));
  const auto& ctx = *s.ctx;
  const auto sp = ahom_harmonic_basis(ctx.a_hom(), 2);
  const Polynomial& P = sp.basis[0];
  const Polynomial& Q = sp.basis[1];
  const auto fp = psi_direct(P, ctx, 8.0), fq = psi_direct(Q, ctx, 8.0);
  const auto fpq = psi_direct(2.0 * P - 0.5 * Q, ctx, 8.0);
  DiscreteField comb = 2.0 * fp;
  comb.axpy(-0.5, fq);
  CHECK(max_abs_diff(fpq, comb) <= 1e-10 * max_abs(fpq));
  const auto fam = psi_initial(ctx, sp);
  for (const auto& m : fam.members) {
    CHECK(std::sqrt(gradient_energy(m.psi, 32.0)) <= std::sqrt(gradient_energy(m.psi, 8.0)));
    CHECK(m.initial_ratio.values.size() == 3);
  }
  CHECK(max_abs_diff(fam.members[0].psi, fp) <= 1e-12 * max_abs(fp));
}

TEST_CASE("doubling is linear in P at every stage") {
  Setup s(gaussian_field(Grid(128, Topology::periodic), 1.0, 0.25, 4));
  const auto& ctx = *s.ctx;
  PsiHierarchy h;
  const auto fam = build_psi_family(ctx, h, 2);
  // the same construction from a rotated basis
  PolySpace rot = fam.space;
  const double c = std::cos(0.3), sn = std::sin(0.3);
  rot.basis[0] = c * fam.space.basis[0] + sn * fam.space.basis[1];
  rot.basis[1] = (-sn) * fam.space.basis[0] + c * fam.space.basis[1];
  PsiFamily r = psi_initial(ctx, rot);
  for (double R = 8; R < 32; R *= 2) psi_double(ctx, h, r, R);
  REQUIRE(r.members[0].increments.size() == fam.members[0].increments.size());
  for (int j = 0; j < 2; ++j) {
    const double a0 = j == 0 ? c : -sn, a1 = j == 0 ? sn : c;
    DiscreteField ref = a0 * fam.members[0].psi;
    ref.axpy(a1, fam.members[1].psi);
    CHECK(max_abs_diff(r.members[j].psi, ref) <= 1e-10 * max_abs(ref));
    for (std::size_t st = 0; st < r.members[j].increments.size(); ++st) {
      DiscreteField inc = a0 * fam.members[0].increments[st];
      inc.axpy(a1, fam.members[1].increments[st]);
      CHECK(max_abs_diff(r.members[j].increments[st], inc) <= 1e-10 * max_abs(ref));
    }
  }
  // psi_for combines the family by linearity
  const auto pc = psi_for(2.0 * rot.basis[1], fam);
  DiscreteField ref = 2.0 * r.members[1].psi;
  CHECK(max_abs_diff(pc.psi, ref) <= 1e-10 * max_abs(ref));
}

TEST_CASE("the projection recovers corrected polynomials of lower degree") {
  Setup s(gaussian_field(Grid(128, Topology::periodic), 1.0, 0.25, 6));
  const auto& ctx = *s.ctx;
  const auto h = build_hierarchy(ctx, 2);
  const PsiFamily* f2 = h.family(2);
  PsiHierarchy lower;
  lower.families.push_back(*f2);
  lower.k = 2;
  // order-3 projection: current family is the degree-3 initial stage
  PsiFamily f3 = psi_initial(ctx, ahom_harmonic_basis(ctx.a_hom(), 3));
  const auto basis = projection_basis(ctx, lower, &f3, 3);
  std::vector<Polynomial> parts{Polynomial(2, 0), 0.7 * ahom_harmonic_basis(ctx.a_hom(), 1).basis[0],
                                f2->space.basis[0] - 0.4 * f2->space.basis[1]};
  const auto u = corrected_polynomial(parts, ctx, h);
  const auto pr = ck11_projection(u.u, 3, ctx, basis, 8.0, 32.0);
  for (int kappa = 1; kappa <= 2; ++kappa)
    CHECK((pr.P[kappa] - parts[kappa]).coefficient_norm() <= 1e-8 * parts[kappa].coefficient_norm());
  CHECK(pr.excess <= 1e-12);
  DiscreteField d = u.u - pr.correction;
  double mean = 0;
  for (double v : d.values()) mean += v;
  mean /= d.size();
  for (double& v : d.values()) v -= mean;
  CHECK(max_abs(d) <= 1e-8 * max_abs(u.u));
}

TEST_CASE("constant coefficients: projection of a harmonic polynomial is its homogeneous parts") {
  Setup s(constant_field(Grid(64, Topology::periodic), {0.8, 0.1, 0.1, 0.5}, 0.25));
  const auto& ctx = *s.ctx;
  const auto h = build_hierarchy(ctx, 2);
  const PsiFamily f3 = psi_initial(ctx, ahom_harmonic_basis(ctx.a_hom(), 3));
  const auto basis = projection_basis(ctx, h, &f3, 3);
  const auto s2 = ahom_harmonic_basis(ctx.a_hom(), 2);
  const Polynomial p2 = 1.5 * s2.basis[1];
  const Polynomial p1 = Polynomial::coordinate(2, 1);
  const auto pr = ck11_projection(evaluate(ctx.grid(), p1 + p2), 3, ctx, basis, 8.0, 16.0);
  CHECK((pr.P[1] - p1).coefficient_norm() <= 1e-9);
  CHECK((pr.P[2] - p2).coefficient_norm() <= 1e-9);
}

TEST_CASE("gaussian doubling increments concentrate near the new annulus") {
  Setup s(gaussian_field(Grid(256, Topology::periodic), 1.0, 0.25, 2));
  const auto& ctx = *s.ctx;
  PsiHierarchy h;
  const auto fam = build_psi_family(ctx, h, 2);
  for (const auto& m : fam.members) {
    REQUIRE(m.increment_ratio.size() == 3);
    for (std::size_t st = 0; st < m.increment_ratio.size(); ++st) {
      const auto& v = m.increment_ratio[st].values;
      const double R = m.stage_radii[st];
      std::size_t arg = 0;
      for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[arg]) arg = k;
      CHECK(m.increment_ratio[st].radii[arg] >= R / 2);
      CHECK(m.increment_ratio[st].radii[arg] <= 2 * R);
      if (m.increment_ratio[st].radii.back() > 4 * R) CHECK(v.back() < v[arg]);
      CHECK(std::isfinite(m.coefficient_ratio[st]));
    }
  }
}

TEST_CASE("gaussian growth constant is bounded across radii") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Setup s(gaussian_field(Grid(128, Topology::periodic), 1.0, 0.25, seed));
    PsiHierarchy h;
    const auto fam = build_psi_family(*s.ctx, h, 2);
    for (const auto& m : fam.members) {
      double lo = 1e300, hi = 0;
      for (double v : m.growth_ratio.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK(hi <= 10 * lo);
    }
  }
}

namespace {

// Periodic three-point problem induced by the nodal right-hand side on
// functions of x1 (the laminate right-hand side does not depend on x2).
DiscreteField one_dimensional_psi(const HigherOrderContext& ctx, const Polynomial& P) {
  const Grid& g = ctx.grid();
  const int n = g.n();
  const auto gn = psi_rhs_nodal(P, ctx);
  const int j0 = n / 2;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const int ii = i == 0 ? n : i;
    const std::size_t r = g.node_index(ii, j0);
    for (int di = -1; di <= 1; ++di) {
      double w = 0;
      for (int dj = -1; dj <= 1; ++dj) w += ctx.op().stencil().at(r, di, dj);
      M(i, ((ii + di) % n + n) % n) += w;
    }
    b[i] = gn[r];
  }
  M.row(0).setOnes();
  b[0] = 0;
  const Eigen::VectorXd psi1 = M.fullPivLu().solve(b);
  DiscreteField ref(g, Rank::scalar, Location::node);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) ref[g.node_index(i, j)] = psi1[i % n];
  return ref;
}

}  // namespace

TEST_CASE("laminate psi for the off-diagonal quadratic matches the one-dimensional solution") {
  Setup s(laminate(256));
  const auto& ctx = *s.ctx;
  PsiHierarchy h;
  const auto fam = build_psi_family(ctx, h, 2);
  const Polynomial P = 2.0 * Polynomial::monomial({1, 1});  // E = e1 (x) e2 + e2 (x) e1
  const auto pc = psi_for(P, fam);
  const auto ref = one_dimensional_psi(ctx, P);
  const Grid& g = ctx.grid();
  // grad psi depends on x1 only and equals the 1D gradient
  const auto gp = discrete_gradient(pc.psi), gr = discrete_gradient(ref);
  const auto cells = cells_in_ball(g, Ball{64.0});
  double err = 0, scale = sup_norm_B1(P) * 64.0;
  for (std::size_t c : cells)
    for (int q = 0; q < 8; ++q) err = std::max(err, std::abs(gp[8 * c + q] - gr[8 * c + q]));
  CHECK(err <= 1e-4 * scale);
}

TEST_CASE("laminate psi for a diagonal quadratic approaches the one-dimensional solution") {
  // Truncating the right-hand side at R_max leaves an a-harmonic remainder
  // whose degree-two part shrinks like r / R_max.
  Setup s(laminate(256));
  const auto& ctx = *s.ctx;
  const Tensor2 ah = ctx.a_hom();
  Polynomial P(2, 2);
  P.coefficient({2, 0}) = ah[3];
  P.coefficient({0, 2}) = -ah[0];
  PsiHierarchy h;
  const auto fam = build_psi_family(ctx, h, 2);
  const auto pc = psi_for(P, fam);
  const auto ref = one_dimensional_psi(ctx, P);
  const CorrectedBasis b1 = corrected_basis(ctx, h, 1);
  double prev = 0;
  for (double r : {8.0, 16.0, 32.0}) {
    const auto ex = excess_k(pc.psi - ref, r, b1);
    const double rel = std::sqrt(ex.value / gradient_energy(ref, r));
    MESSAGE("r = " << r << ": relative gradient deviation " << rel);
    CHECK(rel <= 0.05);
    CHECK(rel > prev);
    prev = rel;
  }
}

TEST_CASE("corrected polynomials are a-harmonic where the right-hand side is built") {
  Setup s(laminate(128));
  const auto& ctx = *s.ctx;
  const auto h = build_hierarchy(ctx, 3);
  const auto u = corrected_polynomial({Polynomial(2, 0), Polynomial(2, 1), Polynomial::monomial({1, 1})}, ctx, h);
  CHECK(relative_residual(ctx.op(), u.u, node_ball_mask(ctx.grid(), 16)) <= 1e-6);
  for (int i = 0; i < 2; ++i) {
    const auto v = ctx.corrected(Polynomial::coordinate(2, i));
    CHECK(relative_residual(ctx.op(), v, node_ball_mask(ctx.grid(), 60)) <= 1e-8);
  }
  CHECK_THROWS_AS(corrected_polynomial({Polynomial(2, 0), Polynomial(2, 1), Polynomial::monomial({2, 0})}, ctx, h),
                  PreconditionError);
  CHECK_THROWS_AS(corrected_polynomial({Polynomial(2, 0), Polynomial(2, 1), Polynomial(2, 2), Polynomial(2, 3),
                                        ahom_harmonic_basis(ctx.a_hom(), 4).basis[0]},
                                       ctx, h),
                  ParameterError);
}

TEST_CASE("telescoping, reproducibility and the direct path") {
  Setup s(gaussian_field(Grid(128, Topology::periodic), 1.0, 0.25, 7));
  const auto& ctx = *s.ctx;
  PsiHierarchy h;
  const auto f1 = build_psi_family(ctx, h, 2);
  const auto f2 = build_psi_family(ctx, h, 2);
  const PsiFamily init = psi_initial(ctx, f1.space);
  for (std::size_t j = 0; j < f1.members.size(); ++j) {
    CHECK(f1.members[j].psi.values() == f2.members[j].psi.values());
    DiscreteField sum = init.members[j].psi;
    for (const auto& inc : f1.members[j].increments) sum += inc;
    CHECK(max_abs_diff(sum, f1.members[j].psi) <= 1e-12 * max_abs(f1.members[j].psi));
    // the direct and doubled constructions differ by an a-harmonic function on B_Rmax
    const auto d = psi_direct(f1.members[j].P, ctx, 32.0) - f1.members[j].psi;
    CHECK(relative_residual(ctx.op(), d, node_ball_mask(ctx.grid(), 31)) <= 1e-8);
  }
  PsiOptions bad;
  bad.r0 = 12;
  CHECK_THROWS_AS(build_psi_family(ctx, h, 2, bad), ParameterError);
  bad.r0 = 8;
  bad.r_max = 64;
  CHECK_THROWS_AS(build_psi_family(ctx, h, 2, bad), ParameterError);
  CHECK_THROWS_AS(build_psi_family(ctx, h, 3), ParameterError);
}
