#include <benchmark/benchmark.h>

#include <random>

#include "sharecause/behavior.h"

namespace sharecause {
namespace {

RowMatrix gaussian_points(Eigen::Index n, Eigen::Index d) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  RowMatrix m(n, d);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
  return m;
}

void BM_Dbscan(benchmark::State& state) {
  const RowMatrix x = gaussian_points(state.range(0), 64);
  const auto p = default_dbscan_params(x);
  for (auto _ : state) benchmark::DoNotOptimize(dbscan(x, p.eps, p.min_pts));
}
BENCHMARK(BM_Dbscan)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Silhouette(benchmark::State& state) {
  const RowMatrix x = gaussian_points(state.range(0), 64);
  std::vector<int> labels(x.rows());
  for (std::size_t k = 0; k < labels.size(); ++k) labels[k] = static_cast<int>(k % 4);
  for (auto _ : state) benchmark::DoNotOptimize(silhouette(x, labels));
}
BENCHMARK(BM_Silhouette)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Project2d(benchmark::State& state) {
  const RowMatrix x = gaussian_points(1000, 64);
  for (auto _ : state) benchmark::DoNotOptimize(project_2d(x));
}
BENCHMARK(BM_Project2d)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace sharecause
