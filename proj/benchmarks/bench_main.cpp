#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "grasens/fractal.hpp"
#include "grasens/gabor.hpp"
#include "grasens/network.hpp"
#include "grasens/ops.hpp"

using namespace grasens;

namespace {

Tensor noise(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  std::vector<double> v(count);
  for (double& x : v) x = n(rng);
  return Tensor::from_data(shape, v);
}

void BM_Conv2d(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const Tensor x = noise({8, side, side}, 1), k = noise({8, 8, 3, 3}, 2);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k, 1, 1));
}
BENCHMARK(BM_Conv2d)->Arg(16)->Arg(32)->Arg(64);

void BM_GaborBank(benchmark::State& state) {
  const GaborLayer layer = init_grid(4, 5, 1);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(layer.kernels());
}
BENCHMARK(BM_GaborBank);

void BM_EstimateFd(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const Tensor x = noise({1, side, side}, 3);
  const std::vector<double> map(x.data().begin(), x.data().end());
  for (auto _ : state) benchmark::DoNotOptimize(estimate_fd(map, side, side, FdSpec{}));
}
BENCHMARK(BM_EstimateFd)->Arg(32)->Arg(64)->Arg(128);

void BM_BlockForward(benchmark::State& state) {
  ModelConfig cfg;
  cfg.lambda = 1;
  cfg.block.width = static_cast<std::size_t>(state.range(0));
  cfg.in_channels = 2;
  cfg.in_height = 8;
  cfg.in_width = 16;
  const GraSensModel model(cfg);
  NoGradGuard guard;
  const Tensor f1 = model.generation_stage(noise({2, 8, 16}, 4));
  for (auto _ : state) benchmark::DoNotOptimize(model.block_forward(0, f1));
}
BENCHMARK(BM_BlockForward)->Arg(4)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
