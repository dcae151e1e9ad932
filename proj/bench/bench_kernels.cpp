#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "homoglab/coeff.hpp"
#include "homoglab/operator.hpp"
#include "homoglab/solver.hpp"

using namespace homog;

namespace {

const Stencil9& stencil(int n) {
  static std::map<int, DiscreteOperator> ops;
  auto it = ops.find(n);
  if (it == ops.end())
    it = ops.emplace(n, DiscreteOperator(gaussian_field(Grid(n, Topology::periodic), 1.0, 0.25, 1)
                                             .with_topology(Topology::box)))
             .first;
  return it->second.stencil();
}

std::vector<double> random_vector(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

template <void (*F)(const Stencil9&, const double*, double*)>
void BM_apply(benchmark::State& st) {
  const auto& s = stencil(static_cast<int>(st.range(0)));
  const auto x = random_vector(s.nodes());
  std::vector<double> y(s.nodes());
  for (auto _ : st) {
    F(s, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(s.nodes()));
}

template <double (*F)(std::size_t, const double*, const double*)>
void BM_dot(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)) * st.range(0);
  const auto a = random_vector(n), b = random_vector(n);
  for (auto _ : st) benchmark::DoNotOptimize(F(n, a.data(), b.data()));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(n));
}

void BM_solve(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto a = gaussian_field(Grid(n, Topology::periodic), 1.0, 0.25, 1).with_topology(Topology::box);
  const DiscreteOperator op(a);
  const LinearSolver solver(op, {});
  DiscreteField f(op.grid(), Rank::scalar, Location::node);
  f[op.grid().node_index(n / 2, n / 2)] = 1;
  for (auto _ : st) benchmark::DoNotOptimize(solver.solve(f, {}).data());
}

}  // namespace

BENCHMARK(BM_apply<kernels::apply_serial>)->Name("apply_serial")->Arg(256)->Arg(512)->Arg(1024);
BENCHMARK(BM_apply<kernels::apply>)->Name("apply_omp")->Arg(256)->Arg(512)->Arg(1024);
BENCHMARK(BM_dot<kernels::dot_serial>)->Name("dot_serial")->Arg(256)->Arg(512)->Arg(1024);
BENCHMARK(BM_dot<kernels::dot>)->Name("dot_omp")->Arg(256)->Arg(512)->Arg(1024);
BENCHMARK(BM_solve)->Name("mg_cg_solve")->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
