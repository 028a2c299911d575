#include <random>

#include <benchmark/benchmark.h>

#include "mdr/evaluation.hpp"
#include "mdr/experiment/config.hpp"
#include "mdr/experiment/trainer.hpp"
#include "mdr/mdr.hpp"
#include "mdr/numerics/ops.hpp"
#include "mdr/sampling.hpp"

namespace {

mdr::Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  mdr::Tensor t({rows, cols});
  for (double& v : t.data()) v = n(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const mdr::Tensor a = random_matrix(32, n, 1);
  const mdr::Tensor b = random_matrix(n, n, 2);
  for (auto _ : state) {
    mdr::Tape tape;
    benchmark::DoNotOptimize(mdr::ops::matmul(tape.constant(a), tape.constant(b)).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * 32 * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_PairwiseDistancesForwardBackward(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const mdr::Tensor e = random_matrix(b, 64, 3);
  std::vector<mdr::Label> labels(b);
  for (std::size_t i = 0; i < b; ++i) labels[i] = static_cast<mdr::Label>(i % 8);
  const mdr::PairSet pairs = mdr::all_pairs(labels);
  for (auto _ : state) {
    mdr::Tape tape;
    mdr::Var v = tape.variable(e);
    tape.backward(mdr::ops::mean(mdr::pairwise_distances(v, pairs)));
    benchmark::DoNotOptimize(tape.grad(v).data().data());
  }
}
BENCHMARK(BM_PairwiseDistancesForwardBackward)->Arg(32)->Arg(128);

void BM_DistanceWeightedSampling(benchmark::State& state) {
  const mdr::Tensor e = random_matrix(32, 64, 4);
  std::vector<mdr::Label> labels(32);
  for (std::size_t i = 0; i < 32; ++i) labels[i] = static_cast<mdr::Label>(i / 4);
  mdr::SamplerState sampler(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mdr::distance_weighted_triplets(e, labels, {}, sampler));
  }
}
BENCHMARK(BM_DistanceWeightedSampling);

void BM_TrainingStep(benchmark::State& state) {
  mdr::ExperimentConfig config;
  config.mdr.enabled = state.range(0) != 0;
  if (!config.mdr.enabled) {
    config.loss.lambda = 0.0;
    config.loss.trick = false;
  }
  mdr::Trainer trainer(config, 0, mdr::materialize_dataset(config));
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step());
}
BENCHMARK(BM_TrainingStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RecallAtK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const mdr::Tensor e = random_matrix(n, 64, 6);
  std::vector<mdr::Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<mdr::Label>(i % 30);
  const std::vector<std::size_t> ks = {1, 2, 4, 8};
  for (auto _ : state) benchmark::DoNotOptimize(mdr::recall_at_k(e, labels, ks));
}
BENCHMARK(BM_RecallAtK)->Arg(600)->Arg(1800)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
