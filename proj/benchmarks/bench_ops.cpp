#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "trires/ops.hpp"
#include "trires/tape.hpp"

using namespace trires;

namespace {

// Args: channels, spatial side. 3x3, stride 1, pad 1, as in the residual blocks.
void BM_Conv2dForward(benchmark::State& state) {
  const auto c = state.range(0), s = state.range(1);
  const Tensor x = testing::random_tensor({8, c, s, s}, 1, Dtype::f32);
  const Tensor w = testing::random_tensor({c, c, 3, 3}, 2, Dtype::f32);
  const Tensor b = Tensor::zeros({c}, Dtype::f32);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, 1, 1));
  state.SetItemsProcessed(state.iterations() * 8 * c * c * 9 * s * s);
}
BENCHMARK(BM_Conv2dForward)->Args({8, 32})->Args({16, 16})->Args({64, 56})->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = state.range(0), s = state.range(1);
  const Tensor x = testing::random_tensor({8, c, s, s}, 1, Dtype::f32, -1, 1, true);
  const Tensor w = testing::random_tensor({c, c, 3, 3}, 2, Dtype::f32, -1, 1, true);
  const Tensor b = Tensor::zeros({c}, Dtype::f32);
  for (auto _ : state) {
    backward(sum(conv2d(x, w, b, 1, 1)));
    Tensor(x).zero_grad();
    Tensor(w).zero_grad();
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({8, 32})->Args({16, 16})->Unit(benchmark::kMillisecond);

void BM_Linear(benchmark::State& state) {
  const auto in = state.range(0);
  const Tensor x = testing::random_tensor({32, in}, 1, Dtype::f32);
  const Tensor w = testing::random_tensor({16, in}, 2, Dtype::f32);
  const Tensor b = Tensor::zeros({16}, Dtype::f32);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(linear(x, w, b));
}
BENCHMARK(BM_Linear)->Arg(192)->Arg(1536);

void BM_BatchNormTrain(benchmark::State& state) {
  const Tensor x = testing::random_tensor({32, 16, 16, 16}, 1, Dtype::f32);
  const Tensor g = Tensor::full({16}, 1.0, Dtype::f32), b = Tensor::zeros({16}, Dtype::f32);
  RunningStats stats = RunningStats::fresh(16, Dtype::f32);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(batch_norm2d(x, g, b, stats, Mode::train));
}
BENCHMARK(BM_BatchNormTrain);

}  // namespace
