#pragma once

#include <cstdint>

#include "trires/image.hpp"

namespace trires {

// Hexcone HSV: h in [0, 360), s and v in [0, 1]. Achromatic pixels get h = 0.
struct Hsv {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

Hsv rgb_to_hsv(Rgb rgb);
// Inverse hexcone conversion, rounded to the nearest 8-bit value.
Rgb hsv_to_rgb(const Hsv& hsv);

// Channel-wise 8-bit quantization used for thresholding: round(h * 255 / 360),
// round(s * 255), round(v * 255).
struct HsvImage {
  GrayImage h;
  GrayImage s;
  GrayImage v;
};

HsvImage rgb_to_hsv(const RgbImage& image);

}  // namespace trires
