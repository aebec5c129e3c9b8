#include <benchmark/benchmark.h>

#include <map>

#include "gnnbias/dataset.hpp"
#include "gnnbias/subgraph.hpp"
#include "gnnbias/training.hpp"

using namespace gnnbias;

namespace {

const PartitionedDataset& grid(std::size_t side) {
  static std::map<std::size_t, PartitionedDataset> cache;
  auto it = cache.find(side);
  if (it == cache.end()) {
    SynthSpec s;
    s.rows = s.cols = side;
    s.per_partition_count = 32;
    s.dperp_count = 8;
    it = cache.emplace(side, synth_grid_partition(s)).first;
  }
  return it->second;
}

ModelParams model(Conv conv, Pooling pool) {
  ModelConfig mc;
  mc.conv = conv;
  mc.pooling = pool;
  return init_params(mc, 0);
}

void BM_SynthesizeGrid(benchmark::State& state) {
  SynthSpec s;
  s.rows = s.cols = static_cast<std::size_t>(state.range(0));
  s.per_partition_count = 16;
  s.dperp_count = 16;
  for (auto _ : state) benchmark::DoNotOptimize(synth_grid_partition(s));
}
BENCHMARK(BM_SynthesizeGrid)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_Occurs(benchmark::State& state) {
  const auto& ds = grid(12);
  const auto& graphs = ds.partition(Partition::d0);
  for (auto _ : state) {
    for (const Graph& g : graphs) benchmark::DoNotOptimize(occurs(g, ds.pattern));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(graphs.size()));
}
BENCHMARK(BM_Occurs);

template <Conv C, Pooling P>
void BM_SampleGradient(benchmark::State& state) {
  const auto& ds = grid(static_cast<std::size_t>(state.range(0)));
  const ModelParams m = model(C, P);
  const GraphInputs in = prepare_inputs(ds.partition(Partition::d1).front(), m);
  for (auto _ : state) benchmark::DoNotOptimize(sample_gradients(m, in, 1));
}
BENCHMARK(BM_SampleGradient<Conv::gcn, Pooling::avg>)->Arg(12);
BENCHMARK(BM_SampleGradient<Conv::gcn, Pooling::attn>)->Arg(12);
BENCHMARK(BM_SampleGradient<Conv::gcn, Pooling::max>)->Arg(12);
BENCHMARK(BM_SampleGradient<Conv::gat, Pooling::attn>)->Arg(6)->Arg(12);

void BM_TrainEpoch(benchmark::State& state) {
  const auto& ds = grid(12);
  const ModelParams m = model(Conv::gcn, Pooling::attn);
  const TrainingSet data = make_training_set(ds.labeled(), m);
  TrainConfig tc;
  tc.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(m, data, tc));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_EnumerateSubgraphs(benchmark::State& state) {
  const Graph g = grid(12).partition(Partition::d1).front();
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_subgraphs(g, k));
}
BENCHMARK(BM_EnumerateSubgraphs)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
