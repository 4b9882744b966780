#include "trires/tissue.hpp"

#include <algorithm>

#include "trires/color.hpp"
#include "trires/otsu.hpp"

namespace trires {

bool TissueMask::contains_level0(std::int64_t x, std::int64_t y) const {
  const std::int64_t u = x / downsample, v = y / downsample;
  if (u < 0 || v < 0 || u >= mask.width || v >= mask.height) return false;
  return mask.at(static_cast<int>(u), static_cast<int>(v)) != 0;
}

int choose_working_level(const PyramidalSlide& slide, int max_short, int max_long) {
  for (int l = 0; l < slide.level_count(); ++l) {
    const auto& info = slide.level(l);
    const int s = std::min(info.width, info.height), g = std::max(info.width, info.height);
    if (s <= max_short && g <= max_long) return l;
  }
  return slide.level_count() - 1;
}

GrayImage tissue_mask_from_image(const RgbImage& image) {
  const HsvImage hsv = rgb_to_hsv(image);
  GrayImage mask(image.width, image.height);
  bool any_channel = false;
  for (const GrayImage* channel : {&hsv.h, &hsv.s}) {
    int t;
    try {
      t = otsu_threshold(*channel);
    } catch (const DegenerateHistogram&) {
      continue;
    }
    any_channel = true;
    for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
      if (channel->pixels[i] > t) mask.pixels[i] = 1;
    }
  }
  if (!any_channel) throw EmptyMaskError("hue and saturation are both constant; no tissue found");
  return mask;
}

TissueMask tissue_mask(const PyramidalSlide& slide, int working_level) {
  const auto& info = slide.level(working_level);
  TissueMask out;
  out.level = working_level;
  out.downsample = info.downsample;
  try {
    out.mask = tissue_mask_from_image(slide.read_level(working_level));
  } catch (const EmptyMaskError& e) {
    throw EmptyMaskError("slide '" + slide.id() + "': " + e.what());
  }
  return out;
}

TissueMask tissue_mask(const PyramidalSlide& slide) {
  return tissue_mask(slide, choose_working_level(slide));
}

Point map_coords(Point pt, int from_level, int to_level, const PyramidalSlide& slide) {
  const auto& from = slide.level(from_level);
  const auto& to = slide.level(to_level);
  const std::int64_t x = pt.x * from.downsample / to.downsample;
  const std::int64_t y = pt.y * from.downsample / to.downsample;
  if (pt.x < 0 || pt.y < 0 || x >= to.width || y >= to.height) {
    throw BoundsError("point (" + std::to_string(pt.x) + ", " + std::to_string(pt.y) +
                      ") maps outside level " + std::to_string(to_level));
  }
  return {x, y};
}

}  // namespace trires
