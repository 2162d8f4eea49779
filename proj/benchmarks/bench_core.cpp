// Microbenchmarks for the hot paths: masked forward/backward, global
// magnitude pruning, and mask similarity.

#include <benchmark/benchmark.h>

#include "rtl/analysis.hpp"
#include "rtl/mask.hpp"
#include "rtl/network.hpp"

using namespace rtl;

namespace {

ParamSet bench_params(std::size_t width) {
  Rng rng(42);
  return init_params({16, width, width, 4}, rng);
}

BinaryMask bench_mask(const ParamSet& p, double keep) {
  Rng rng(43);
  BinaryMask m = BinaryMask::ones_like(p);
  for (auto& layer : m.layers) {
    for (auto& b : layer) b = rng.uniform() < keep ? 1 : 0;
  }
  return m;
}

void bm_forward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const ParamSet params = bench_params(width);
  const BinaryMask mask = bench_mask(params, 0.5);
  Rng rng(44);
  Tensor input = Tensor::matrix(32, 16);
  for (double& v : input.data) v = rng.normal();
  for (auto _ : state) {
    auto [out, cache] = forward(params, mask, input);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(bm_forward)->Arg(32)->Arg(128);

void bm_forward_backward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const ParamSet params = bench_params(width);
  const BinaryMask mask = bench_mask(params, 0.5);
  Rng rng(45);
  Tensor input = Tensor::matrix(32, 16);
  for (double& v : input.data) v = rng.normal();
  Tensor target = Tensor::matrix(32, 4);
  for (double& v : target.data) v = rng.normal();
  for (auto _ : state) {
    auto [out, cache] = forward(params, mask, input);
    auto [loss, lg] = loss_and_grad(out, target, LossKind::MeanSquaredError);
    Gradients g = backward(cache, lg);
    benchmark::DoNotOptimize(g.layers.data());
  }
}
BENCHMARK(bm_forward_backward)->Arg(32)->Arg(128);

void bm_magnitude_prune(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const ParamSet params = bench_params(width);
  const BinaryMask mask = bench_mask(params, 0.9);
  const std::size_t amount = mask.surviving() / 5;
  for (auto _ : state) {
    BinaryMask pruned = magnitude_prune(params, mask, amount);
    benchmark::DoNotOptimize(pruned.layers.data());
  }
}
BENCHMARK(bm_magnitude_prune)->Arg(128)->Arg(512);

void bm_jaccard(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const ParamSet params = bench_params(width);
  const BinaryMask a = bench_mask(params, 0.5);
  Rng rng(46);
  BinaryMask b = BinaryMask::ones_like(params);
  for (auto& layer : b.layers) {
    for (auto& bit : layer) bit = rng.uniform() < 0.5 ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(jaccard(a, b));
}
BENCHMARK(bm_jaccard)->Arg(128)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
