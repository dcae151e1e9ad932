#include <doctest.h>

#include <cmath>
#include <random>

#include "homoglab/coeff.hpp"
#include "homoglab/correctors.hpp"
#include "homoglab/errors.hpp"
#include "oracles.hpp"

using namespace homog;

namespace {

double max_abs(const DiscreteField& f) {
  double m = 0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

CorrectorSet laminate_correctors(int n, std::vector<double>* profile = nullptr) {
  const Grid g(n, Topology::periodic);
  const auto p = two_phase_profile(n, 8, 0.25, 1.0);
  if (profile) *profile = p;
  return compute_correctors(laminate_field(g, p, 0.25));
}

}  // namespace

TEST_CASE("constant coefficients have vanishing correctors") {
  const Grid g(32, Topology::periodic);
  for (const Tensor2& t : {Tensor2{1, 0, 0, 1}, Tensor2{0.8, 0.15, 0.15, 0.5}}) {
    const auto c = compute_correctors(constant_field(g, t, 0.3));
    for (int i = 0; i < 2; ++i) {
      CHECK(max_abs(c.phi[i]) <= 1e-11);
      CHECK(max_abs(c.q[i]) <= 1e-11);
      CHECK(max_abs(c.s[i]) <= 1e-11);
    }
    for (int k = 0; k < 4; ++k) CHECK(std::abs(c.a_hom[k] - t[k]) <= 1e-12);
    const auto prof = sublinearity_profile(c);
    for (double e : prof.eps) CHECK(e <= 1e-11);
  }
}

TEST_CASE("laminate correctors match the one-dimensional closed forms") {
  std::vector<double> p;
  const auto c = laminate_correctors(64, &p);
  const Grid& g = c.grid;
  CHECK(std::abs(c.a_hom[0] - 0.4) <= 1e-8);
  CHECK(std::abs(c.a_hom[3] - 0.625) <= 1e-8);
  CHECK(std::abs(c.a_hom[1]) <= 1e-8);
  CHECK(std::abs(c.a_hom[2]) <= 1e-8);
  const auto phi1 = oracle::laminate_phi1(p);
  double err = 0, nrm = 0;
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) {
      err += std::pow(c.phi[0][g.node_index(i, j)] - phi1[i], 2);
      nrm += phi1[i] * phi1[i];
    }
  CHECK(std::sqrt(err / nrm) <= 1e-6);
  CHECK(max_abs(c.phi[1]) <= 1e-10);
  CHECK(max_abs(c.q[0]) <= 1e-10);
  // sigma_221 = antiderivative of alpha - <alpha>
  const auto s2 = oracle::laminate_sigma(p);
  err = nrm = 0;
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) {
      err += std::pow(c.sigma(1, 1, 0, g.cell_index(i, j)) - s2[i], 2);
      nrm += s2[i] * s2[i];
    }
  CHECK(std::sqrt(err / nrm) <= 1e-6);
  CHECK(max_abs(c.s[0]) <= 1e-10);
}

TEST_CASE("sigma is skew and its divergence reproduces q") {
  const Grid g(64, Topology::periodic);
  const auto c = compute_correctors(gaussian_field(g, 1.0, 0.25, 7));
  const auto sig = c.sigma_field();
  for (std::size_t cell = 0; cell < g.cell_count(); ++cell)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) CHECK(sig[8 * cell + 4 * i + 2 * j + k] + sig[8 * cell + 4 * i + 2 * k + j] == 0.0);
  for (int i = 0; i < 2; ++i) {
    const auto chk = check_sigma(c.q[i], c.s[i]);
    CHECK(chk.relative_error <= 1e-6);
    CHECK(chk.harmonic_part <= 1e-10);
  }
  const auto zero = compute_sigma(DiscreteField(g, Rank::vector, Location::quadrature));
  CHECK(max_abs(zero) == 0.0);
}

TEST_CASE("edge fluxes carry the node divergence") {
  const Grid g(16, Topology::periodic);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  DiscreteField q(g, Rank::vector, Location::quadrature);
  for (double& v : q.values()) v = u(rng);
  const auto e = edge_fluxes(q);
  const auto div = discrete_divergence(q);
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < 16; ++i) {
      const double d = e.h[g.node_index((i + 15) % 16, j)] - e.h[g.node_index(i, j)] +
                       e.v[g.node_index(i, (j + 15) % 16)] - e.v[g.node_index(i, j)];
      CHECK(d == doctest::Approx(div[g.node_index(i, j)]).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("flux is mean zero and a_hom is symmetric elliptic") {
  const Grid g(64, Topology::periodic);
  const auto a = gaussian_field(g, 1.0, 0.25, 3);
  const auto c = compute_correctors(a);
  for (int i = 0; i < 2; ++i) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < c.q[i].size(); k += 2) {
      mx += c.q[i][k];
      my += c.q[i][k + 1];
    }
    CHECK(std::abs(mx) / c.q[i].size() <= 1e-12);
    CHECK(std::abs(my) / c.q[i].size() <= 1e-12);
  }
  CHECK(std::abs(c.a_hom[1] - c.a_hom[2]) <= 1e-8);
  CoefficientField h{g, {c.a_hom}, 0.25};
  h.grid = g;
  h.a.assign(g.cell_count(), c.a_hom);
  CHECK(check_ellipticity(h, 100).ok);
}

TEST_CASE("a_hom lies between the harmonic and arithmetic means") {
  const Grid g(32, Topology::periodic);
  for (std::uint64_t seed = 1; seed <= 64; ++seed) {
    const auto a = gaussian_field(g, 1.0, 0.25, seed);
    double harm = 0, arith = 0;
    for (const auto& t : a.a) {
      harm += 1.0 / t[0];
      arith += t[0];
    }
    harm = a.a.size() / harm;
    arith /= a.a.size();
    const auto c = compute_correctors(a, SolveOptions{1e-11});
    // eigenvalues of a_hom - harm Id >= 0 and of arith Id - a_hom >= 0
    const double tr = c.a_hom[0] + c.a_hom[3];
    const double det = c.a_hom[0] * c.a_hom[3] - 0.25 * std::pow(c.a_hom[1] + c.a_hom[2], 2);
    const double lo = 0.5 * (tr - std::sqrt(tr * tr - 4 * det)), hi = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
    CHECK(lo >= harm - 1e-10);
    CHECK(hi <= arith + 1e-10);
  }
}

TEST_CASE("checkerboard correctors respect the tiling symmetry") {
  const int n = 32;
  const Grid g(n, Topology::periodic);
  const auto c = compute_correctors(checkerboard_field(g, 8, 0.25, 1.0, 0.25));
  // The tiling is invariant under the mirror taking cell row j to 3 - j (node
  // row j to 4 - j); phi_1 is even under it and phi_2 odd.
  double sym = 0, nrm = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int jm = ((4 - j) % n + n) % n;
      sym += std::pow(c.phi[0][g.node_index(i, j)] - c.phi[0][g.node_index(i, jm)], 2);
      sym += std::pow(c.phi[1][g.node_index(i, j)] + c.phi[1][g.node_index(i, jm)], 2);
      nrm += std::pow(c.phi[0][g.node_index(i, j)], 2);
    }
  CHECK(std::sqrt(sym / nrm) <= 1e-8);
  // cubic symmetry of the tiling gives an isotropic a_hom
  CHECK(std::abs(c.a_hom[0] - c.a_hom[3]) <= 1e-8);
  CHECK(std::abs(c.a_hom[1]) <= 1e-8);
}

TEST_CASE("relabeling the axes permutes the correctors") {
  const int n = 32;
  const Grid g(n, Topology::periodic);
  const auto a = gaussian_field(g, 1.0, 0.25, 9, true);
  CoefficientField b = a;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Tensor2& t = a[g.cell_index(j, i)];
      b[g.cell_index(i, j)] = {t[3], t[2], t[1], t[0]};
    }
  const auto ca = compute_correctors(a, SolveOptions{1e-12});
  const auto cb = compute_correctors(b, SolveOptions{1e-12});
  CHECK(cb.a_hom[0] == doctest::Approx(ca.a_hom[3]).epsilon(1e-9));
  CHECK(cb.a_hom[3] == doctest::Approx(ca.a_hom[0]).epsilon(1e-9));
  double worst = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(cb.phi[0][g.node_index(i, j)] - ca.phi[1][g.node_index(j, i)]));
      worst = std::max(worst, std::abs(cb.phi[1][g.node_index(i, j)] - ca.phi[0][g.node_index(j, i)]));
      // swapping axes reverses orientation, so the stream functions change sign
      worst = std::max(worst, std::abs(cb.s[0][g.cell_index(i, j)] + ca.s[1][g.cell_index(j, i)]));
    }
  CHECK(worst <= 1e-8);
}

TEST_CASE("laminate sublinearity profile matches the closed-form fields") {
  std::vector<double> p;
  const auto c = laminate_correctors(256, &p);
  CorrectorSet ref = c;
  const Grid& g = c.grid;
  const auto phi1 = oracle::laminate_phi1(p);
  const auto s2 = oracle::laminate_sigma(p);
  for (int j = 0; j < 256; ++j)
    for (int i = 0; i < 256; ++i) {
      ref.phi[0][g.node_index(i, j)] = phi1[i];
      ref.phi[1][g.node_index(i, j)] = 0.0;
      ref.s[0][g.cell_index(i, j)] = 0.0;
      ref.s[1][g.cell_index(i, j)] = s2[i];
    }
  const auto a = sublinearity_profile(c), b = sublinearity_profile(ref);
  REQUIRE(a.radii.size() == b.radii.size());
  CHECK(a.truncation_radius == 64.0);
  for (std::size_t k = 0; k < a.radii.size(); ++k) {
    CHECK(std::abs(a.eps[k] / b.eps[k] - 1) <= 0.02);
    if (k > 0) CHECK(a.eps[k] <= a.eps[k - 1]);
    CHECK(a.eps[k] >= 0);
  }
  CHECK(eps_at(c, 40.0) >= eps_at(c, 64.0));
}

TEST_CASE("gaussian correctors are empirically sublinear") {
  const Grid g(1024, Topology::periodic);
  const auto c = compute_correctors(gaussian_field(g, 1.0, 0.25, 1));
  const auto p = sublinearity_profile(c);
  std::string line;
  for (std::size_t k = 0; k < p.radii.size(); ++k) line += " " + std::to_string(p.raw[k]);
  MESSAGE("raw corrector sizes:" << line);
  for (std::size_t k = 5; k < p.radii.size(); ++k) {
    if (p.radii[k] < 16 || p.radii[k] > 256) continue;
    CHECK(p.eps[k] < p.eps[k - 1]);
  }
}
