#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "trires/errors.hpp"

namespace trires {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  Rgb at(int x, int y) const {
    const auto* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    auto* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// 8-bit single channel, row-major. Binary masks use 0 / 1 in memory.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  void set(int x, int y, std::uint8_t v) { pixels[static_cast<std::size_t>(y) * width + x] = v; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Binary netpbm: P6 (RGB) and P5 (gray), maxval 255.
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

// Header of a binary netpbm file, with the byte offset of the first pixel.
struct NetpbmHeader {
  char kind = '6';
  int width = 0;
  int height = 0;
  std::streamoff data_offset = 0;
};
NetpbmHeader read_netpbm_header(const std::filesystem::path& path);

// Sub-rectangle read from a P6 file touching only the needed rows.
RgbImage read_ppm_region(const std::filesystem::path& path, const NetpbmHeader& header, int x,
                         int y, int w, int h);

RgbImage crop(const RgbImage& image, int x, int y, int w, int h);
// Halves both extents (floor), each output pixel the rounded mean of a 2x2 block.
RgbImage mean_pool_2x2(const RgbImage& image);

}  // namespace trires
