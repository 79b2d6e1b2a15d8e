#include <benchmark/benchmark.h>

#include "sharecause/dissemination.h"
#include "sharecause/propensity.h"
#include "sharecause/synthgen.h"

namespace sharecause {
namespace {

InteractionSet bench_interactions(std::size_t users, std::size_t items) {
  WorldConfig w;
  w.num_users = users;
  w.num_items = items;
  return sample_interactions(generate_world(w, 1), 2);
}

Backbone backbone_arg(const benchmark::State& state) {
  return state.range(0) ? Backbone::kNeural : Backbone::kMf;
}

void BM_ScoreAll(benchmark::State& state) {
  const auto model = FactorModel::gaussian(backbone_arg(state), 100, 300,
                                           static_cast<std::size_t>(state.range(1)), 0.1, 3);
  int user = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_all(model, user));
    user = (user + 1) % 100;
  }
  state.SetItemsProcessed(state.iterations() * 300);
}
BENCHMARK(BM_ScoreAll)->ArgsProduct({{0, 1}, {16, 64}});

void BM_Gradients(benchmark::State& state) {
  const auto set = bench_interactions(2000, 300);
  const auto model = FactorModel::gaussian(backbone_arg(state), set.num_users(),
                                           set.num_items(), 64, 0.01, 4);
  auto batch = sample_triplets(set, 1024, 5);
  const auto table = news_propensity(set);
  for (auto& t : batch.triplets) {
    t.theta_pos = table.at(t.user, t.pos);
    t.theta_neg = table.at(t.user, t.neg);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(gradients(model, batch, 1e-2, true, RegularizationScope::kBatch));
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_Gradients)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_SampleTriplets(benchmark::State& state) {
  const auto set = bench_interactions(2000, 300);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_triplets(set, 1024, ++seed));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_SampleTriplets)->Unit(benchmark::kMicrosecond);

// Ten epochs on the standard 2000 x 300 world.
void BM_TrainTenEpochs(benchmark::State& state) {
  const auto set = bench_interactions(2000, 300);
  TrainConfig tc = TrainConfig::defaults_for(backbone_arg(state));
  tc.epochs = 10;
  const PropensitySource source = news_propensity(set);
  for (auto _ : state) benchmark::DoNotOptimize(train(backbone_arg(state), set, source, tc));
}
BENCHMARK(BM_TrainTenEpochs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace sharecause
