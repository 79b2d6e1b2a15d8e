#include <benchmark/benchmark.h>

#include "sharecause/causal.h"
#include "sharecause/synthgen.h"

namespace sharecause {
namespace {

void BM_FitOutcomeModel(benchmark::State& state) {
  PlantedConfounderConfig c;
  c.num_users = static_cast<std::size_t>(state.range(0));
  c.confounder_dims = 64;
  const auto d = generate_planted_confounder(c, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        fit_outcome_model(d.attributes, d.attribute_names, &d.confounder_proxy, d.outcome));
  }
}
BENCHMARK(BM_FitOutcomeModel)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace sharecause
