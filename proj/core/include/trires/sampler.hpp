#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "trires/manifest.hpp"
#include "trires/slide.hpp"
#include "trires/tissue.hpp"

namespace trires {

constexpr int kDefaultTileSide = 224;
constexpr int kDefaultSamplingBudget = 10000;

// True when the level-0 pixel (x, y) lies in the slide's malignancy mask;
// false for slides without one.
bool malignant_at(const PyramidalSlide& slide, std::int64_t x, std::int64_t y);

struct SamplerOptions {
  int tile_side = kDefaultTileSide;
  int max_attempts = kDefaultSamplingBudget;  // per tile
};

// Alternates malignant and benign draws, malignant first, until n records
// exist. A malignant draw picks a slide with a nonempty malignancy mask and
// rejection-samples a tile whose centre is malignant; a benign draw picks any
// slide and rejection-samples a centre inside tissue and outside malignancy.
// Every record is tagged train. Pure function of (slides, n, options, seed).
//   n odd -> ConfigError
//   no slide can host a malignant tile -> SamplingExhausted
//   budget exhausted for one tile -> SamplingExhausted
DatasetManifest sample_balanced_tiles(const SlideSet& slides, int n, std::uint64_t seed,
                                      const SamplerOptions& options = {});

// Same, reusing precomputed tissue masks keyed by slide id.
DatasetManifest sample_balanced_tiles(const SlideSet& slides,
                                      const std::map<std::string, TissueMask>& tissue, int n,
                                      std::uint64_t seed, const SamplerOptions& options = {});

std::map<std::string, TissueMask> tissue_masks(const SlideSet& slides);

}  // namespace trires
