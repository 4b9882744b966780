#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "trires/tensor.hpp"

namespace trires {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment accumulators keyed by parameter identity, plus the shared step
// counter t.
struct AdamState {
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  AdamConfig config;
  std::int64_t t = 0;
  std::unordered_map<const void*, Moments> moments;

  const Moments* find(const Tensor& param) const;
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient, after which the gradients are zeroed. StateError when a
// parameter tracks gradients but backward never reached it, or does not
// track gradients at all.
void adam_step(std::span<const Tensor> params, AdamState& state, double lr);

}  // namespace trires
