#include <benchmark/benchmark.h>

#include <vector>

#include "entlab/aepo.hpp"
#include "entlab/config.hpp"
#include "entlab/entropy.hpp"
#include "entlab/rng.hpp"
#include "entlab/rollout.hpp"
#include "entlab/task.hpp"
#include "entlab/trainer.hpp"

using namespace entlab;

namespace {

ExperimentConfig bench_config() {
  ExperimentConfig c;
  c.cold_chain = 3.5;
  c.threads = 1;
  return c;
}

void BM_SampleRollout(benchmark::State& state) {
  const auto c = bench_config();
  const auto s = initial_state(c);
  const auto task = make_task(static_cast<int>(state.range(0)), 3);
  const auto params = sampling_params(c);
  std::uint64_t seed = 0;
  std::size_t tokens = 0;
  for (auto _ : state) {
    auto tr = sample_rollout(s.policy, task, params, ++seed);
    tokens += tr.length();
    benchmark::DoNotOptimize(tr);
  }
  state.counters["tokens/s"] = benchmark::Counter(static_cast<double>(tokens), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SampleRollout)->Arg(1)->Arg(4)->Arg(7);

void BM_SurrogateGradient(benchmark::State& state) {
  const auto c = bench_config();
  auto s = initial_state(c);
  const auto params = sampling_params(c);
  const int groups = static_cast<int>(state.range(0));
  std::vector<Trajectory> trs;
  std::vector<std::vector<std::size_t>> lengths(static_cast<std::size_t>(groups));
  Rng rng(5);
  for (int g = 0; g < groups; ++g) {
    const auto task = make_task(1 + g % 7, static_cast<std::uint64_t>(g));
    for (int i = 0; i < c.group_size; ++i) {
      trs.push_back(sample_rollout(s.policy, task, params, rng.raw()));
      lengths[static_cast<std::size_t>(g)].push_back(trs.back().length());
    }
  }
  const auto agg = aggregation_weights(lengths, Aggregation::per_sequence);
  std::vector<SurrogateItem> items;
  for (std::size_t i = 0; i < trs.size(); ++i) {
    SurrogateItem it;
    it.trajectory = &trs[i];
    for (std::size_t t = 0; t < trs[i].length(); ++t) it.advantages.push_back(rng.normal());
    it.kl_weights.assign(trs[i].length(), 0.01);
    it.kappa = 1.0;
    it.weight = agg[i / static_cast<std::size_t>(c.group_size)][i % static_cast<std::size_t>(c.group_size)];
    items.push_back(std::move(it));
  }
  for (auto _ : state) benchmark::DoNotOptimize(surrogate_loss(s.policy, items, SurrogateOptions{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(items.size()));
}
BENCHMARK(BM_SurrogateGradient)->Arg(1)->Arg(16);

void BM_WindowEntropy(benchmark::State& state) {
  Rng rng(7);
  std::vector<double> h(static_cast<std::size_t>(state.range(0)));
  for (double& x : h) x = 2.0 * rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(window_entropy(h, 4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WindowEntropy)->Range(16, 4096);

void BM_BatchThreshold(benchmark::State& state) {
  Rng rng(8);
  std::vector<std::vector<double>> batch(static_cast<std::size_t>(state.range(0)));
  for (auto& tr : batch) {
    tr.resize(24);
    for (double& x : tr) x = 2.0 * rng.uniform();
  }
  for (auto _ : state) benchmark::DoNotOptimize(batch_threshold(batch, 0.95));
}
BENCHMARK(BM_BatchThreshold)->Arg(16)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
  auto c = bench_config();
  c.mode = static_cast<AlgoMode>(state.range(0));
  auto s = initial_state(c);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(c, s));
}
BENCHMARK(BM_TrainStep)->Arg(static_cast<int>(AlgoMode::aepo))->Arg(static_cast<int>(AlgoMode::grpo))->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
