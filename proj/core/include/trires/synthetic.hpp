#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trires/slide.hpp"

namespace trires {

// Axis-aligned rectangle, or the ellipse inscribed in it.
struct Region {
  enum class Kind { rect, ellipse };
  Kind kind = Kind::ellipse;
  double x = 0, y = 0, w = 0, h = 0;

  bool contains(double px, double py) const;
};

// Procedural stand-in for a stained whole-slide image: near-white background,
// one tissue region with a smooth eosin-like texture, and malignant
// subregions with a dense nuclei-like texture.
struct SyntheticSlideSpec {
  std::string slide_id = "synthetic";
  int width = 512;
  int height = 512;
  Rgb background{242, 242, 242};
  Region tissue{Region::Kind::ellipse, 32, 32, 448, 448};
  std::vector<Region> malignant{{Region::Kind::ellipse, 176, 176, 160, 160}};
  Rgb benign_color{226, 150, 198};
  Rgb malignant_color{150, 84, 176};
  Rgb nucleus_color{84, 36, 124};
  int texture_amplitude = 14;
  std::uint64_t seed = 1;
};

struct SyntheticSlide {
  PyramidalSlide slide;
  GrayImage tissue_truth;      // level 0, 1 = tissue
  GrayImage malignancy_truth;  // level 0, 1 = malignant
};

// Deterministic in the spec. Levels have downsample 1, 4 and 16, each the
// 2x2 mean-pool chain of the previous one. SpecError when a malignant pixel
// lies outside the tissue region or the extents are unusable.
SyntheticSlide generate_synthetic_slide(const SyntheticSlideSpec& spec);

void validate(const SyntheticSlideSpec& spec);

// Writes the slide directory plus tissue_mask_level0.pgm (0 / 255).
void save_synthetic_slide(const SyntheticSlide& synthetic, const std::filesystem::path& dir);

}  // namespace trires
