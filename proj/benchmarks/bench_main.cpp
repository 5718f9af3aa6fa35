#include <benchmark/benchmark.h>

#include "bst/monte_carlo.hpp"
#include "bst/operator.hpp"
#include "bst/phantom.hpp"
#include "bst/recon.hpp"

using namespace bst;

namespace {

ScannerConfig desk_scanner() {
  auto s = ScannerConfig::full_scale();
  s.source_x1 = lattice(-300, 60, 11);
  s.detector_x1 = lattice(-297.5, 5, 120);
  s.energies = lattice(1, 1, 29);
  return s;
}

const ImageGrid& desk_grid() {
  static const ImageGrid g = ImageGrid::uniform(150, 0, 2, 120, -300, 300);
  return g;
}

const BraggOperator& desk_operator() {
  static const BraggOperator A = build_operator(desk_scanner(), desk_grid(), 0.0);
  return A;
}

void BM_BuildOperator(benchmark::State& state) {
  const auto scanner = desk_scanner();
  for (auto _ : state) benchmark::DoNotOptimize(build_operator(scanner, desk_grid(), 0.0));
}
BENCHMARK(BM_BuildOperator)->Unit(benchmark::kMillisecond);

void BM_Apply(benchmark::State& state) {
  const auto& A = desk_operator();
  const std::vector<double> x(A.cols(), 1.0);
  std::vector<double> y(A.rows());
  for (auto _ : state) {
    A.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["nnz"] = static_cast<double>(A.matrix().nnz());
}
BENCHMARK(BM_Apply)->Unit(benchmark::kMicrosecond);

void BM_ApplyTranspose(benchmark::State& state) {
  const auto& A = desk_operator();
  const std::vector<double> y(A.rows(), 1.0);
  std::vector<double> x(A.cols());
  for (auto _ : state) {
    A.apply_transpose(y, x);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_ApplyTranspose)->Unit(benchmark::kMicrosecond);

void BM_ObjectiveAndGradient(benchmark::State& state) {
  const auto& A = desk_operator();
  const auto library = build_library(lattice(-200, 5, 81), lattice(10, 5, 5), desk_grid());
  const std::vector<double> b(A.rows(), 3.0);
  const BsrProblem prob(A, library, b, ReconParams{});
  const std::vector<double> a(library.size(), 0.5);
  const Matrix Y(desk_grid().n(), library.size(), 0.1);
  Matrix gy;
  std::vector<double> ga(library.size());
  for (auto _ : state) benchmark::DoNotOptimize(prob.evaluate(a, Y, &gy, ga));
  state.counters["entries"] = static_cast<double>(library.size());
}
BENCHMARK(BM_ObjectiveAndGradient)->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state) {
  MaterialLibrary materials(std::string(BST_BENCH_DATA_DIR) + "/materials");
  const auto scanner = desk_scanner();
  McConfig mc;
  mc.histories = static_cast<std::uint64_t>(state.range(0));
  mc.energy_indices = {19};
  mc.phantom.objects = {{"NaCl", ShapeKind::sphere, 0.0, 15.0, 1.0}};
  for (auto _ : state) benchmark::DoNotOptimize(mc_run(mc, scanner, materials));
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<std::int64_t>(scanner.source_x1.size()));
}
BENCHMARK(BM_MonteCarlo)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
