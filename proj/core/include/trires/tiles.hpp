#pragma once

#include <span>
#include <vector>

#include "trires/manifest.hpp"
#include "trires/slide.hpp"
#include "trires/tensor.hpp"

namespace trires {

// [1, 3, side, side] level-0 crop with channels scaled to [0, 1].
// BoundsError when the record leaves level 0.
Tensor extract_tile(const PyramidalSlide& slide, const TileRecord& record, Dtype dtype = Dtype::f32);
Tensor image_to_tensor(const RgbImage& image, Dtype dtype = Dtype::f32);

// Bilinear resampling of [N, C, s, s] to [N, C, t, t] with pixel-centre
// alignment. t == s copies exactly; constant planes stay exactly constant.
Tensor resize_tile(const Tensor& tile, int target);

// Concatenates [1, C, H, W] tiles along the batch axis.
Tensor stack_tiles(std::span<const Tensor> tiles);

// Extracts (and resizes, when target_side > 0 and differs) each record.
Tensor load_batch(const SlideSet& slides, std::span<const TileRecord> records,
                  Dtype dtype = Dtype::f32, int target_side = 0);

}  // namespace trires
