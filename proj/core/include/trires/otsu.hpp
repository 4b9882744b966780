#pragma once

#include <array>
#include <cstdint>

#include "trires/image.hpp"

namespace trires {

using Histogram = std::array<std::uint64_t, 256>;

Histogram histogram(const GrayImage& image);

// Threshold t in 0..254 maximising the between-class variance
// w0(t) w1(t) (mu0(t) - mu1(t))^2 where class 0 holds values <= t. The
// comparison is exact; ties resolve to the smallest t. Throws
// DegenerateHistogram when fewer than two distinct values occur.
int otsu_threshold(const Histogram& hist);
int otsu_threshold(const GrayImage& image);

// 1 where value > t, else 0.
GrayImage foreground_above(const GrayImage& image, int t);

}  // namespace trires
