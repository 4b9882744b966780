#pragma once

#include <cstdint>

#include "trires/slide.hpp"

namespace trires {

// Binary tissue map (1 = tissue) at a working pyramid level.
struct TissueMask {
  int level = 0;
  int downsample = 1;
  GrayImage mask;

  bool contains_level0(std::int64_t x, std::int64_t y) const;
};

// Working resolution of roughly 3072 x 7168: the highest-resolution level
// whose short side is <= max_short and long side <= max_long, else the
// coarsest level.
int choose_working_level(const PyramidalSlide& slide, int max_short = 3072, int max_long = 7168);

// Otsu foreground (> t) on the quantised H channel OR on the S channel. A
// degenerate channel is skipped; EmptyMaskError when both are degenerate.
GrayImage tissue_mask_from_image(const RgbImage& image);
TissueMask tissue_mask(const PyramidalSlide& slide, int working_level);
TissueMask tissue_mask(const PyramidalSlide& slide);

struct Point {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Rescales by d_from / d_to with floor rounding. BoundsError if the result
// falls outside the target level.
Point map_coords(Point pt, int from_level, int to_level, const PyramidalSlide& slide);

}  // namespace trires
