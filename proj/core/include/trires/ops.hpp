#pragma once

#include <span>
#include <vector>

#include "trires/tensor.hpp"

namespace trires {

enum class Mode { train, eval };

// Per-channel running statistics of a batch-norm layer. Plain leaves, updated
// in place by train-mode forwards.
struct RunningStats {
  Tensor mean;
  Tensor var;
  double momentum = 0.1;

  static RunningStats fresh(std::int64_t channels, Dtype dtype);
};

struct BatchNormOptions {
  double eps = 1e-5;
  bool update_running_stats = true;
};

// x[N,Cin,H,W] * weight[Cout,Cin,kh,kw] (+ bias[Cout]). Pass an undefined
// tensor for no bias. Lowered to im2col + matrix product.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride,
              int padding);

Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    RunningStats& stats, Mode mode, const BatchNormOptions& options = {});

Tensor relu(const Tensor& x);

// Unpadded windowed maximum; backward routes to the first argmax.
Tensor max_pool2d(const Tensor& x, int kernel, int stride);

Tensor global_avg_pool(const Tensor& x);

// x[N,Din] * weight[Dout,Din]^T + bias[Dout].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor concat_features(std::span<const Tensor> parts);

// Mean over the batch of -log softmax(logits)[label].
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& x);
// Scalar sum(a * b).
Tensor dot(const Tensor& a, const Tensor& b);

// Row-wise softmax of [N,K] logits. Not recorded on the tape.
Tensor softmax(const Tensor& logits);

// Output extent of a convolution or pooling window along one axis.
constexpr std::int64_t window_output_extent(std::int64_t in, std::int64_t kernel,
                                            std::int64_t stride, std::int64_t padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

}  // namespace trires
