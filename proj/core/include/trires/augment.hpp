#pragma once

#include <random>

#include "trires/tensor.hpp"

namespace trires {

struct AugmentConfig {
  bool horizontal_flip = false;
  bool vertical_flip = false;
  bool rotation = false;      // k * 90 degrees, k uniform in 0..3
  double brightness = 0.0;    // delta uniform in [-brightness, brightness]; 0 disables
  double flip_probability = 0.5;

  bool any() const { return horizontal_flip || vertical_flip || rotation || brightness > 0.0; }
};

// All operate per sample on [N, C, s, s] and return a new tensor.
Tensor flip_horizontal(const Tensor& tiles);
Tensor flip_vertical(const Tensor& tiles);
// Clockwise rotation by k quarter turns (k taken mod 4).
Tensor rotate90(const Tensor& tiles, int k);
// Adds delta to every element, clamped to [0, 1].
Tensor adjust_brightness(const Tensor& tiles, double delta);

// Random horizontal flip, vertical flip, quarter-turn rotation and
// brightness shift in that order, drawn independently for every sample.
// Disabled switches consume no randomness.
Tensor augment_tile(const Tensor& tiles, const AugmentConfig& config, std::mt19937_64& rng);

}  // namespace trires
