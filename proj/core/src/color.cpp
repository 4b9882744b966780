#include "trires/color.hpp"

#include <algorithm>
#include <cmath>

namespace trires {

Hsv rgb_to_hsv(Rgb rgb) {
  const double r = rgb.r / 255.0, g = rgb.g / 255.0, b = rgb.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta > 0.0) {
    double h;
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
  }
  return out;
}

Rgb hsv_to_rgb(const Hsv& hsv) {
  const double c = hsv.v * hsv.s;
  const double hp = hsv.h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c, g = x;
  } else if (hp < 2) {
    r = x, g = c;
  } else if (hp < 3) {
    g = c, b = x;
  } else if (hp < 4) {
    g = x, b = c;
  } else if (hp < 5) {
    r = x, b = c;
  } else {
    r = c, b = x;
  }
  const double m = hsv.v - c;
  auto to8 = [](double u) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(u * 255.0), 0L, 255L));
  };
  return {to8(r + m), to8(g + m), to8(b + m)};
}

HsvImage rgb_to_hsv(const RgbImage& image) {
  HsvImage out{GrayImage(image.width, image.height), GrayImage(image.width, image.height),
               GrayImage(image.width, image.height)};
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    const Hsv p = rgb_to_hsv(Rgb{image.pixels[3 * i], image.pixels[3 * i + 1], image.pixels[3 * i + 2]});
    out.h.pixels[i] = static_cast<std::uint8_t>(std::lround(p.h * 255.0 / 360.0));
    out.s.pixels[i] = static_cast<std::uint8_t>(std::lround(p.s * 255.0));
    out.v.pixels[i] = static_cast<std::uint8_t>(std::lround(p.v * 255.0));
  }
  return out;
}

}  // namespace trires
