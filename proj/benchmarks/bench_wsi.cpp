#include <benchmark/benchmark.h>

#include <random>

#include "fixtures.hpp"
#include "trires/otsu.hpp"
#include "trires/sampler.hpp"
#include "trires/tiles.hpp"
#include "trires/tissue.hpp"

using namespace trires;

namespace {

void BM_OtsuHistogram(benchmark::State& state) {
  std::mt19937_64 rng(1);
  Histogram h{};
  for (auto& c : h) c = rng() % 1000;
  for (auto _ : state) benchmark::DoNotOptimize(otsu_threshold(h));
}
BENCHMARK(BM_OtsuHistogram);

void BM_TissueMask(benchmark::State& state) {
  const auto slide = generate_synthetic_slide(testing::small_spec("bench", 1, 512)).slide;
  for (auto _ : state) benchmark::DoNotOptimize(tissue_mask(slide));
}
BENCHMARK(BM_TissueMask)->Unit(benchmark::kMillisecond);

void BM_SampleBalancedTiles(benchmark::State& state) {
  SlideSet slides;
  slides.emplace("bench", generate_synthetic_slide(testing::small_spec("bench", 1, 512)).slide);
  const auto tissue = tissue_masks(slides);
  SamplerOptions o;
  o.tile_side = 32;
  for (auto _ : state) benchmark::DoNotOptimize(sample_balanced_tiles(slides, tissue, 1000, 2, o));
}
BENCHMARK(BM_SampleBalancedTiles)->Unit(benchmark::kMillisecond);

void BM_ResizeTile(benchmark::State& state) {
  const Tensor t = testing::random_tensor({1, 3, 50, 50}, 1, Dtype::f32, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(resize_tile(t, 197));
}
BENCHMARK(BM_ResizeTile);

}  // namespace

BENCHMARK_MAIN();
