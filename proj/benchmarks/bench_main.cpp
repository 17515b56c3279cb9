#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fpforge/evaluate.hpp"
#include "fpforge/gp.hpp"
#include "fpforge/kernels.hpp"
#include "fpforge/mogp.hpp"

using namespace fpforge;

namespace {

std::vector<Point> points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(0.0, 100.0);
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({c(rng), c(rng)});
  return out;
}

Eigen::MatrixXd targets(std::size_t n, std::size_t t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(-100.0, -40.0);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = level(rng);
  return y;
}

const Kernel kMatern52 = make_kernel(KernelFamily::Matern52, 1.0, 10.0);

void BM_GramMatrix(benchmark::State& state) {
  const auto pts = points(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_matrix(kMatern52, pts));
}
BENCHMARK(BM_GramMatrix)->Arg(100)->Arg(500)->Arg(1000);

void BM_SogpFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pts = points(n, 2);
  const Eigen::VectorXd y = targets(n, 1, 3).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(SogpModel::fit(pts, y, kMatern52, 1.0));
}
BENCHMARK(BM_SogpFit)->Arg(100)->Arg(300)->Arg(500);

void BM_MogpFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = static_cast<std::size_t>(state.range(1));
  const auto solver = state.range(2) == 0 ? MogpSolver::Kronecker : MogpSolver::Dense;
  const auto pts = points(n, 4);
  const Eigen::MatrixXd y = targets(n, t, 5);
  const CoregionalizationSpec c = default_mixing(t, 2, 1, 6, kMatern52);
  for (auto _ : state) benchmark::DoNotOptimize(MogpModel::fit(pts, y, c, 1.0, solver));
  state.SetLabel(solver == MogpSolver::Kronecker ? "kronecker" : "dense");
}
BENCHMARK(BM_MogpFit)
    ->Args({100, 10, 0})
    ->Args({100, 10, 1})
    ->Args({300, 20, 0})
    ->Args({300, 20, 1})
    ->Args({500, 100, 0})
    ->Unit(benchmark::kMillisecond);

void BM_MogpPredictMean(benchmark::State& state) {
  const auto pts = points(300, 7);
  const MogpModel model =
      MogpModel::fit(pts, targets(300, 50, 8), default_mixing(50, 2, 1, 9, kMatern52), 1.0);
  const auto queries = points(static_cast<std::size_t>(state.range(0)), 10);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_mean(queries));
}
BENCHMARK(BM_MogpPredictMean)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_KnnLocalize(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> level(-110, -40);
  FingerprintDataset train;
  for (std::size_t i = 0; i < n; ++i) {
    FingerprintRecord r;
    for (std::size_t w = 0; w < kUjiWapCount; ++w) r.rssi.push_back(static_cast<float>(level(rng)));
    train.records.push_back(std::move(r));
  }
  const KnnLocalizer knn(train);
  const std::vector<float> query = train.records.front().rssi;
  for (auto _ : state) benchmark::DoNotOptimize(knn.localize(query, 3));
}
BENCHMARK(BM_KnnLocalize)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
