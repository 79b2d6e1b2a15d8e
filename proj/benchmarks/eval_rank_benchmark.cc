#include <benchmark/benchmark.h>

#include "sharecause/eval_rank.h"
#include "sharecause/io.h"
#include "sharecause/synthgen.h"

namespace sharecause {
namespace {

void BM_Evaluate(benchmark::State& state) {
  WorldConfig w;
  w.num_users = static_cast<std::size_t>(state.range(0));
  w.num_items = 300;
  const auto world = generate_world(w, 1);
  SplitOptions o;
  o.mode = SplitMode::kUniformExposureSynthetic;
  o.world = &world;
  const auto split = split_train_test(sample_interactions(world, 2), o);
  const auto model = FactorModel::gaussian(Backbone::kMf, w.num_users, w.num_items, 64, 0.1, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(model, split.train, split.test,
                                      CandidatePolicy::kExcludeTrainingPositives, {5, 10, 20}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_NdcgAtK(benchmark::State& state) {
  RankedList list;
  for (int k = 0; k < 300; ++k) {
    list.items.push_back(k);
    list.relevance.push_back(k % 17 == 0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ndcg_at_k(list, 20));
}
BENCHMARK(BM_NdcgAtK);

}  // namespace
}  // namespace sharecause
