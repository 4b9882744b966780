#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "trires/ops.hpp"
#include "trires/tensor.hpp"

namespace trires {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using Rng = std::mt19937_64;

struct Conv2dLayer {
  Tensor weight;  // [Cout, Cin, k, k]
  Tensor bias;    // undefined: no bias
  int stride = 1;
  int padding = 0;

  Tensor forward(const Tensor& x) const { return conv2d(x, weight, bias, stride, padding); }
};

struct BatchNormLayer {
  Tensor gamma;
  Tensor beta;
  RunningStats stats;

  Tensor forward(const Tensor& x, Mode mode, bool update_stats) {
    return batch_norm2d(x, gamma, beta, stats, mode, {1e-5, update_stats});
  }
};

struct LinearLayer {
  Tensor weight;  // [Dout, Din]
  Tensor bias;    // [Dout]

  Tensor forward(const Tensor& x) const { return linear(x, weight, bias); }
  std::int64_t in_features() const { return weight.dim(1); }
  std::int64_t out_features() const { return weight.dim(0); }
};

// Bias-free convolution with weights ~ N(0, 2 / fan_in).
Conv2dLayer make_conv(int in_channels, int out_channels, int kernel, int stride, int padding,
                      Rng& rng, Dtype dtype);
// gamma = 1, beta = 0, running mean 0 / var 1.
BatchNormLayer make_batch_norm(int channels, Dtype dtype);
// Weights and bias ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
LinearLayer make_linear(int in_features, int out_features, Rng& rng, Dtype dtype);

void append_parameters(std::vector<NamedTensor>& out, const std::string& prefix,
                       const Conv2dLayer& conv);
void append_parameters(std::vector<NamedTensor>& out, const std::string& prefix,
                       const BatchNormLayer& bn);
void append_parameters(std::vector<NamedTensor>& out, const std::string& prefix,
                       const LinearLayer& fc);
void append_buffers(std::vector<NamedTensor>& out, const std::string& prefix,
                    const BatchNormLayer& bn);

// Copies values elementwise between two equally laid out tensor lists.
void copy_values(const std::vector<NamedTensor>& from, const std::vector<NamedTensor>& to);

LinearLayer clone(const LinearLayer& fc);

}  // namespace trires
