#include <doctest.h>

#include <cmath>
#include <random>

#include "homoglab/coeff.hpp"
#include "homoglab/errors.hpp"
#include "homoglab/operator.hpp"
#include "oracles.hpp"

using namespace homog;

TEST_CASE("sigmoid clamp saturates and stays in [lambda, 1]") {
  const Grid g(8, Topology::periodic);
  DiscreteField raw(g, Rank::scalar, Location::cell);
  raw[0] = 40.0;
  raw[1] = -40.0;
  const auto a = clamp_to_elliptic(raw, 0.25);
  CHECK(std::abs(a[0][0] - 1.0) <= 1e-9);
  CHECK(std::abs(a[1][0] - 0.25) <= 1e-9);
  CHECK(a[2][0] == doctest::Approx(0.625));  // s(0) = 1/2
  CHECK(a[2][1] == 0.0);
  CHECK(check_ellipticity(a).ok);
}

TEST_CASE("clamp is Lipschitz with constant (1 - lambda) / 4") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0, 3);
  const Grid g(8, Topology::periodic);
  DiscreteField raw(g, Rank::scalar, Location::cell);
  for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = nd(rng);
  DiscreteField raw2 = raw;
  for (std::size_t k = 0; k < raw.size(); ++k) raw2[k] += 0.1 * nd(rng);
  const double lambda = 0.3;
  const auto a1 = clamp_to_elliptic(raw, lambda), a2 = clamp_to_elliptic(raw2, lambda);
  for (std::size_t k = 0; k < raw.size(); ++k)
    CHECK(std::abs(a1[k][0] - a2[k][0]) <= (1 - lambda) * kSigmoidLipschitz * std::abs(raw[k] - raw2[k]) + 1e-15);
}

TEST_CASE("constant input gives a constant tensor") {
  const Grid g(16, Topology::periodic);
  DiscreteField zero(g, Rank::scalar, Location::cell);
  const auto a = clamp_to_elliptic(zero, 0.5);
  for (const auto& t : a.a) CHECK(t == a[0]);
  CHECK(check_ellipticity(a).ok);
}

TEST_CASE("gaussian field is deterministic and elliptic") {
  const Grid g(64, Topology::periodic);
  const auto a = gaussian_field(g, 1.0, 0.25, 42);
  const auto b = gaussian_field(g, 1.0, 0.25, 42);
  const auto c = gaussian_field(g, 1.0, 0.25, 43);
  CHECK(a.a == b.a);
  CHECK(a.a != c.a);
  CHECK(check_ellipticity(a).ok);
  CHECK(check_ellipticity(gaussian_field(g, 1.0, 0.25, 1, true)).ok);
  CHECK_THROWS_AS(gaussian_field(g, 0.0, 0.25, 1), ParameterError);
  CHECK_THROWS_AS(gaussian_field(g, -1.0, 0.25, 1), ParameterError);
  CHECK_THROWS_AS(gaussian_field(Grid(64, Topology::box), 1.0, 0.25, 1), ParameterError);
  const auto raw = gaussian_raw(g, 1.0, 5);
  double m = 0, v = 0;
  for (double x : raw.values()) m += x;
  m /= raw.size();
  for (double x : raw.values()) v += (x - m) * (x - m);
  v /= raw.size();
  CHECK(std::abs(m) < 0.5);
  CHECK(v > 0.3);
  CHECK(v < 3.0);
}

TEST_CASE("gaussian covariance decays like |x|^-beta") {
  const int n = 256;
  const Grid g(n, Topology::periodic);
  for (double beta : {0.5, 1.0}) {
    std::vector<double> cov(n / 8 + 1, 0.0), cov_diag(n / 8 + 1, 0.0);
    const int seeds = 64;
    for (int s = 0; s < seeds; ++s) {
      const auto f = gaussian_raw(g, beta, 1000 + s);
      for (int lag = 2; lag <= n / 8; ++lag) {
        double acc = 0, accy = 0;
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) {
            acc += f[g.cell_index(i, j)] * f[g.cell_index((i + lag) % n, j)];
            accy += f[g.cell_index(i, j)] * f[g.cell_index(i, (j + lag) % n)];
          }
        cov[lag] += acc / (double(n) * n * seeds);
        cov_diag[lag] += accy / (double(n) * n * seeds);
      }
    }
    // Least-squares slope of log covariance against log lag.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int lag = 2; lag <= n / 8; ++lag) {
      const double x = std::log(double(lag)), y = std::log(cov[lag]);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
      ++cnt;
    }
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    CHECK(std::abs(slope + beta) <= 0.15);
    // isotropy: lag along e1 and e2 agree within Monte-Carlo error
    for (int lag : {2, 4, 8}) CHECK(std::abs(cov[lag] - cov_diag[lag]) <= 0.1 * cov[lag]);
  }
}

TEST_CASE("laminate field") {
  const Grid g(32, Topology::periodic);
  const auto p = two_phase_profile(32, 8, 0.25, 1.0);
  CHECK(oracle::harmonic_mean(p) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(oracle::arithmetic_mean(p) == doctest::Approx(0.625).epsilon(1e-15));
  const auto a = laminate_field(g, p, 0.25);
  CHECK(check_ellipticity(a).ok);
  for (int j = 0; j < 32; ++j) CHECK(a[g.cell_index(3, j)] == a[g.cell_index(3, 0)]);
  const auto flat = laminate_field(g, std::vector<double>(32, 0.7), 0.25);
  for (const auto& t : flat.a) CHECK(t == flat[0]);
  CHECK_THROWS_AS(laminate_field(g, two_phase_profile(32, 8, 0.1, 1.0), 0.25), ParameterError);
  CHECK(check_ellipticity(checkerboard_field(g, 8, 0.25, 1.0, 0.25)).ok);
}

TEST_CASE("meyers field") {
  const Grid g(128, Topology::box);
  CHECK_THROWS_AS(meyers_field(g, 0.1), ParameterError);
  CHECK_THROWS_AS(meyers_field(Grid(128, Topology::periodic), 0.5), ParameterError);
  const auto mf = meyers_field(g, 0.5);
  CHECK(mf.a.lambda == 0.25);
  const auto rep = check_ellipticity(mf.a);
  CHECK(rep.ok);
  // eigenvalues {1, alpha^2} off the origin cells
  for (std::size_t c = 0; c < g.cell_count(); c += 37) {
    const auto& t = mf.a[c];
    const double tr = t[0] + t[3], det = t[0] * t[3] - t[1] * t[2];
    CHECK(tr == doctest::Approx(1.25).epsilon(1e-14));
    const double lo = 0.5 * (tr - std::sqrt(tr * tr - 4 * det));
    CHECK(lo == doctest::Approx(0.25).epsilon(1e-12));
  }
  // analytic polar residual away from the origin
  for (double r : {3.0, 10.0, 50.0})
    for (double th : {0.1, 1.3, 2.9}) {
      const double scale = 0.5 * std::pow(r, -1.5);
      CHECK(std::abs(meyers_flux_divergence(0.5, r * std::cos(th), r * std::sin(th))) <= 1e-6 * scale);
    }
  // a wrong exponent is detected by the same check
  CHECK(std::abs(meyers_flux_divergence(0.5, 3.0, 1.0) - meyers_flux_divergence(0.5, 3.0, 1.0)) == 0.0);
}

TEST_CASE("meyers discrete residual decreases with resolution") {
  // l2 norm of A u0 on 8 <= |x| <= N/4 relative to the square root of the
  // energy of u0 on B_{N/4}.
  std::vector<double> res;
  for (int n : {256, 512, 1024}) {
    const Grid g(n, Topology::box);
    const auto mf = meyers_field(g, 0.5);
    const DiscreteOperator op(mf.a);
    const auto r = op.apply(mf.u0);
    const auto mask = node_annulus_mask(g, 8.0, n / 4.0 + 1e-9);
    double num = 0;
    for (std::size_t k = 0; k < r.size(); ++k)
      if (mask[k]) num += r[k] * r[k];
    const auto flux = apply_tensor(mf.a, discrete_gradient(mf.u0));
    const auto grad = discrete_gradient(mf.u0);
    double energy = 0;
    for (std::size_t c : cells_in_ball(g, Ball{n / 4.0}))
      for (int q = 0; q < 8; ++q) energy += 0.25 * grad[8 * c + q] * flux[8 * c + q];
    res.push_back(std::sqrt(num / energy));
  }
  MESSAGE("meyers residuals " << res[0] << " " << res[1] << " " << res[2]);
  CHECK(res[2] <= 1e-3);
  CHECK(res[1] < res[0]);
  CHECK(res[2] < res[1]);
}

TEST_CASE("smoothing inside the unit ball") {
  const Grid g(64, Topology::box);
  const auto mf = meyers_field(g, 0.5);
  const double rho = 4.0;
  const auto s = smooth_inside_unit_ball(mf.a, rho);
  CHECK_THROWS_AS(smooth_inside_unit_ball(mf.a, 16.0), ParameterError);
  int inside = 0;
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) {
      const auto x = g.cell_center(i, j);
      const std::size_t c = g.cell_index(i, j);
      if (std::hypot(x[0], x[1]) >= rho) CHECK(s[c] == mf.a[c]);
      else ++inside;
    }
  CHECK(inside > 0);
  CHECK(check_ellipticity(s).ok);
  const double bound = smoothing_second_derivative_bound(0.5, rho);
  double worst = 0;
  for (int j = 1; j < 63; ++j)
    for (int i = 1; i < 63; ++i) {
      const auto x = g.cell_center(i, j);
      if (std::hypot(x[0], x[1]) >= rho - 1) continue;
      for (int k = 0; k < 4; ++k) {
        const double dxx = s[g.cell_index(i + 1, j)][k] - 2 * s[g.cell_index(i, j)][k] + s[g.cell_index(i - 1, j)][k];
        const double dyy = s[g.cell_index(i, j + 1)][k] - 2 * s[g.cell_index(i, j)][k] + s[g.cell_index(i, j - 1)][k];
        worst = std::max({worst, std::abs(dxx), std::abs(dyy)});
      }
    }
  CHECK(worst <= 4 * bound);
}

TEST_CASE("generators pass the ellipticity sample test") {
  const Grid g(32, Topology::periodic);
  CHECK(check_ellipticity(constant_field(g, {0.8, 0.1, 0.1, 0.6}, 0.5), 10000).ok);
  CHECK_THROWS_AS(constant_field(g, {2.0, 0, 0, 1.0}, 0.5), ParameterError);
  CHECK_THROWS_AS(constant_field(g, {0.3, 0, 0, 1.0}, 0.5), ParameterError);
}
