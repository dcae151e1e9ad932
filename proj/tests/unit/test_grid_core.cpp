#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "homoglab/errors.hpp"
#include "homoglab/field.hpp"
#include "homoglab/field_io.hpp"
#include "homoglab/grid.hpp"
#include "homoglab/kernels.hpp"

using namespace homog;

namespace {

DiscreteField random_nodes(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  DiscreteField f(g, Rank::scalar, Location::node);
  for (double& v : f.values()) v = u(rng);
  return f;
}

DiscreteField random_quadrature(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  DiscreteField f(g, Rank::vector, Location::quadrature);
  for (double& v : f.values()) v = u(rng);
  return f;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid(6, Topology::periodic), ParameterError);
  CHECK_THROWS_AS(Grid(9, Topology::box), ParameterError);
  CHECK_THROWS_AS(Grid(16, Topology::box, 3), ParameterError);
  const Grid g(16, Topology::box);
  CHECK(g.node_count() == 17 * 17);
  CHECK(g.node_coord(8, 8)[0] == 0.0);
  CHECK(g.cell_center(8, 8)[1] == 0.5);
  CHECK(Grid(16, Topology::periodic).node_count() == 256);
}

TEST_CASE("gradient is exact on affine data") {
  for (auto topo : {Topology::periodic, Topology::box}) {
    const Grid g(16, topo);
    if (topo == Topology::box) {
      const auto u = sample_nodes(g, [](double x, double y) { return 2.0 * x - 0.5 * y + 3.0; });
      const auto du = discrete_gradient(u);
      for (std::size_t k = 0; k < du.size(); k += 2) {
        CHECK(du[k] == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(du[k + 1] == doctest::Approx(-0.5).epsilon(1e-14));
      }
    }
    DiscreteField c(g, Rank::scalar, Location::node);
    for (double& v : c.values()) v = 4.25;
    const auto dc = discrete_gradient(c);
    for (double v : dc.values()) CHECK(v == 0.0);
  }
  const Grid g(16, Topology::box);
  const auto u = sample_nodes(g, [](double x, double) { return x; });
  const auto cc = cell_average(discrete_gradient(u));
  for (std::size_t c = 0; c < g.cell_count(); ++c) CHECK(cc[2 * c] == doctest::Approx(1.0));
}

TEST_CASE("gradient and divergence are adjoint on the torus") {
  const Grid g(32, Topology::periodic);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto u = random_nodes(g, seed);
    const auto F = random_quadrature(g, 100 + seed);
    const auto du = discrete_gradient(u);
    double lhs = 0, scale = 0;
    for (std::size_t k = 0; k < du.size(); ++k) {
      lhs += 0.25 * du[k] * F[k];
      scale += 0.25 * std::abs(du[k] * F[k]);
    }
    const auto divF = discrete_divergence(F);
    double rhs = 0;
    for (std::size_t k = 0; k < u.size(); ++k) rhs -= u[k] * divF[k];
    CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
  }
}

TEST_CASE("divergence of a constant field vanishes on the torus") {
  const Grid g(16, Topology::periodic);
  DiscreteField F(g, Rank::vector, Location::quadrature);
  for (std::size_t k = 0; k < F.size(); k += 2) F[k] = 1.0;
  const auto dF = discrete_divergence(F);
  for (double v : dF.values()) CHECK(std::abs(v) <= 1e-13);
  DiscreteField Fc(g, Rank::vector, Location::cell);
  for (std::size_t k = 0; k < Fc.size(); k += 2) Fc[k] = 1.0;
  const auto dFc = discrete_divergence(Fc);
  for (double v : dFc.values()) CHECK(std::abs(v) <= 1e-13);
}

TEST_CASE("div grad equals the bilinear Laplacian stencil") {
  const Grid g(16, Topology::periodic);
  const auto u = random_nodes(g, 7);
  const auto lap = discrete_divergence(discrete_gradient(u));
  const int n = g.n();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double nb = 0;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (di || dj) nb += u[g.node_index(g.wrap(i + di), g.wrap(j + dj))];
      const double expect = -(8.0 / 3.0 * u[g.node_index(i, j)] - nb / 3.0);
      CHECK(lap[g.node_index(i, j)] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("ball averages") {
  const Grid g(128, Topology::box);
  DiscreteField c(g, Rank::scalar, Location::cell);
  for (double& v : c.values()) v = 3.0;
  CHECK(ball_average(c, Ball{10}, Mean::raw) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(ball_average(c, Ball{10}) == doctest::Approx(3.0).epsilon(1e-14));
  const auto x1 = sample_nodes(g, [](double x, double) { return x; });
  for (double r : {16.0, 32.0, 64.0}) CHECK(std::abs(ball_average(x1, Ball{r}) / (r / 2) - 1) <= 0.02);
  DiscreteField ind(g, Rank::scalar, Location::cell);
  for (std::size_t k : cells_in_ball(g, Ball{16})) ind[k] = 1.0;
  CHECK(std::abs(ball_average(ind, Ball{32}, Mean::raw) - 0.25) <= 0.02);
  CHECK_THROWS_AS(ball_average(c, Ball{0.3}), DomainError);
  CHECK_THROWS_AS(ball_average(c, Ball{100}), DomainError);
  // pointwise domination
  DiscreteField big = c;
  big *= 2.0;
  CHECK(ball_average(big, Ball{20}) >= ball_average(c, Ball{20}));
}

TEST_CASE("ball averages are translation equivariant on the torus") {
  const Grid g(32, Topology::periodic);
  DiscreteField f(g, Rank::scalar, Location::cell);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (double& v : f.values()) v = u(rng);
  DiscreteField s(g, Rank::scalar, Location::cell);
  const int di = 5, dj = 11;
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i) s[g.cell_index((i + di) % 32, (j + dj) % 32)] = f[g.cell_index(i, j)];
  const double a = ball_average(f, Ball{7.3});
  const double b = ball_average(s, Ball{7.3, {double(di), double(dj)}});
  CHECK(a == doctest::Approx(b).epsilon(1e-14));
}

TEST_CASE("ball cell sets are symmetric under the lattice point group") {
  const Grid g(64, Topology::box);
  for (double r : {3.0, 7.5, 16.0, 31.0}) {
    const auto cells = cells_in_ball(g, Ball{r});
    std::set<std::size_t> set(cells.begin(), cells.end());
    for (std::size_t c : cells) {
      const int i = static_cast<int>(c % 64), j = static_cast<int>(c / 64);
      CHECK(set.count(g.cell_index(63 - i, j)));
      CHECK(set.count(g.cell_index(i, 63 - j)));
      CHECK(set.count(g.cell_index(j, i)));
    }
  }
}

TEST_CASE("field file round trip and corruption") {
  const Grid g(16, Topology::box);
  DiscreteField f(g, Rank::vector, Location::quadrature);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (double& v : f.values()) v = nd(rng);
  const std::string bytes = encode_field(f);
  const DiscreteField back = decode_field(bytes);
  CHECK(back.grid() == g);
  CHECK(back.rank() == Rank::vector);
  CHECK(back.location() == Location::quadrature);
  CHECK(back.values() == f.values());

  auto message = [](const std::string& b) {
    try {
      decode_field(b);
    } catch (const FormatError& e) {
      return std::string(e.what()) + "@" + std::to_string(e.offset());
    }
    return std::string("no error");
  };
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK(message(bad).find("magic") != std::string::npos);
  bad = bytes;
  bad[4] = 7;
  CHECK(message(bad).find("dim") != std::string::npos);
  bad = bytes;
  bad[8] = 5;
  CHECK(message(bad).find("extent") != std::string::npos);
  bad = bytes;
  bad[12] = 9;
  CHECK(message(bad).find("rank code") != std::string::npos);
  bad = bytes;
  bad[16] = 4;
  CHECK(message(bad).find("topology") != std::string::npos);
  bad = bytes.substr(0, bytes.size() - 8);
  CHECK(message(bad).find("truncated payload") != std::string::npos);
  CHECK(message(bad).find("@" + std::to_string(bad.size())) != std::string::npos);
  CHECK(message(bytes.substr(0, 10)).find("truncated header") != std::string::npos);
}

TEST_CASE("field files are readable by the reference reader") {
  const Grid g(8, Topology::periodic);
  DiscreteField f(g, Rank::scalar, Location::node);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = 0.5 * k - 3.0;
  const std::string path = "reader_check.hlf";
  serialize_field(f, path);
  const std::string cmd = std::string("python3 ") + HOMOGLAB_TEST_DIR "/reference_reader.py " + path;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[512] = {0};
  const std::size_t got = fread(buf, 1, sizeof(buf) - 1, p);
  pclose(p);
  std::istringstream in(std::string(buf, got));
  int dim, n, rank, loc, topo;
  long count;
  double sum, last;
  in >> dim >> n >> rank >> loc >> topo >> count >> sum >> last;
  CHECK(dim == 2);
  CHECK(n == 8);
  CHECK(rank == 0);
  CHECK(loc == 0);
  CHECK(topo == 0);
  CHECK(count == 64);
  double expect = 0;
  for (double v : f.values()) expect += v;
  CHECK(sum == doctest::Approx(expect));
  CHECK(last == f[63]);
  CHECK(deserialize_field(path).values() == f.values());
  std::remove(path.c_str());
}

TEST_CASE("serial and parallel kernels agree") {
  const Grid g(64, Topology::box);
  Stencil9 s{g.nodes_per_axis(), false, std::vector<double>(9 * g.node_count())};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int j = 0; j < s.m; ++j)
    for (int i = 0; i < s.m; ++i)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (s.neighbor(i, j, di, dj) >= 0) s.at(static_cast<std::size_t>(j) * s.m + i, di, dj) = u(rng);
  std::vector<double> x(s.nodes()), y1(s.nodes()), y2(s.nodes());
  for (double& v : x) v = u(rng);
  kernels::apply_serial(s, x.data(), y1.data());
  kernels::apply(s, x.data(), y2.data());
  CHECK(y1 == y2);
  const double d1 = kernels::dot_serial(x.size(), x.data(), y1.data());
  const double d2 = kernels::dot(x.size(), x.data(), y1.data());
  CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
}
