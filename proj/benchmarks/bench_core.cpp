#include <benchmark/benchmark.h>

#include "qcb/measures.hpp"
#include "qcb/relaxation.hpp"
#include "qcb/semicontinuity.hpp"

using namespace qcb;

namespace {

MeshPtr share(DomainMesh m) { return std::make_shared<const DomainMesh>(std::move(m)); }

void BM_BuildBall2d(benchmark::State& state) {
  const double h = 1.0 / state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(build_ball(2, h));
}
BENCHMARK(BM_BuildBall2d)->Arg(10)->Arg(20)->Arg(40);

void BM_BuildShellHalfBall3d(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(build_shell_half_ball(3, {0, 0, 1}, {0.125, static_cast<int>(state.range(0)), 8}));
}
BENCHMARK(BM_BuildShellHalfBall3d)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_EnergyGradient(benchmark::State& state) {
  const auto mesh = share(build_ball(2, 0.05));
  const DiscreteEnergy E(quartic_well(2, 2), Matrix(2, 2), mesh, 2);
  std::vector<double> x(mesh->num_vertices() * 2, 0.01), g(x.size());
  for (auto _ : state) benchmark::DoNotOptimize(E.value_and_gradient(x, g));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(mesh->num_cells()));
}
BENCHMARK(BM_EnergyGradient);

void BM_EnvelopeQuarticWell1d(benchmark::State& state) {
  const auto mesh = share(build_ball(1, 0.05));
  const Integrand v = quartic_well(1, 1);
  SolverOptions opt;
  opt.multistart = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(quasiconvex_envelope(v, Matrix(1, 1), {v, Matrix(1, 1), mesh, opt}).value);
}
BENCHMARK(BM_EnvelopeQuarticWell1d)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_DeterminantClassification(benchmark::State& state) {
  const Point rho{0, 1, 0};
  const auto mesh = share(build_half_ball(2, rho, 0.25));
  const Integrand v = determinant(2);
  for (auto _ : state)
    benchmark::DoNotOptimize(boundary_quasiconvexification(v, rho, {v, v.zero(), mesh, {}}).classification);
}
BENCHMARK(BM_DeterminantClassification)->Unit(benchmark::kMillisecond);

void BM_MaterializeConcentration(benchmark::State& state) {
  const auto mesh = share(build_shell_half_ball(2, {0, 1, 0}, {0.125, 8, 8}));
  const GradientSequence seq(concentration(Profile::bump({1, 0, 0}, 2, 2), {}, 2.0), mesh);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(seq.materialize(k));
}
BENCHMARK(BM_MaterializeConcentration)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EstimateLaminate(benchmark::State& state) {
  const auto mesh = share(build_ball(2, 0.1));
  const Matrix A = outer({1, 0, 0}, 2, {1, 0, 0}, 2);
  const GradientSequence seq(laminate(A, -1.0 * A, 0.5, {1, 0, 0}), mesh);
  const auto dict = default_dictionary(2, 2, 2.0);
  const std::vector<int> ladder{1, 2, 4, 8};
  for (auto _ : state) benchmark::DoNotOptimize(estimate_pairings(seq, dict, ladder).pairings.size());
}
BENCHMARK(BM_EstimateLaminate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
