#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "trires/ops.hpp"
#include "trires/tape.hpp"
#include "trires/triresnet.hpp"

using namespace trires;

namespace {

StreamConfig desk_config() {
  StreamConfig c;
  c.scale = {1, 8};
  return c;
}

// Arg: batch size; 32x32 tiles through a full-depth 1/8-width model.
void BM_TriResNetPredict(benchmark::State& state) {
  TriResNetModel m = build_triresnet(desk_config(), 2, {1, 2, 3}, 4);
  const Tensor x = testing::random_tensor({state.range(0), 3, 32, 32}, 5, Dtype::f32, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(m.predict_malignancy(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TriResNetPredict)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TriResNetTrainStep(benchmark::State& state) {
  TriResNetModel m = build_triresnet(desk_config(), 2, {1, 2, 3}, 4);
  const Tensor x = testing::random_tensor({32, 3, 32, 32}, 5, Dtype::f32, 0, 1);
  std::vector<int> labels(32);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  for (auto _ : state) {
    backward(softmax_cross_entropy(m.forward(x, Mode::train), labels));
    for (auto& p : m.trainable_parameters()) p.zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TriResNetTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
