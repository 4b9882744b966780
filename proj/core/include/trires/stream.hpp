#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trires/layers.hpp"

namespace trires {

// Positive rational width multiplier for desk-scale runs.
struct WidthScale {
  int num = 1;
  int den = 1;

  friend bool operator==(const WidthScale&, const WidthScale&) = default;
};

WidthScale parse_width_scale(const std::string& text);  // "1/8", "0.125" is rejected
std::string to_string(const WidthScale& scale);

// Layout of one residual stream: 7x7 stem, four stages of basic blocks and
// a global-average-pool head. Defaults give the 34-layer configuration.
struct StreamConfig {
  std::array<int, 4> stage_depths{3, 4, 6, 3};
  int base_width = 64;
  int in_channels = 3;
  WidthScale scale{};

  friend bool operator==(const StreamConfig&, const StreamConfig&) = default;
};

// Throws ConfigError for negative depths, non-positive widths/channels or a
// scaled width below one.
void validate(const StreamConfig& config);

// base_width * {1,2,4,8} * scale.
std::array<int, 4> stage_widths(const StreamConfig& config);
int stem_width(const StreamConfig& config);
int feature_dim(const StreamConfig& config);

// 1 + 2 * sum(stage_depths) + 1.
int layer_count(const StreamConfig& config);

// Learnable parameters of one stream, computed from the layout alone.
std::size_t stream_parameter_count(const StreamConfig& config);
// Batch-norm running-statistic elements of one stream.
std::size_t stream_buffer_count(const StreamConfig& config);

// Spatial extent after the stem and all stages for an input side.
std::int64_t stream_output_extent(const StreamConfig& config, std::int64_t input_extent);

constexpr std::int64_t kMinStreamInput = 32;

struct ResidualBlock {
  Conv2dLayer conv1;
  BatchNormLayer bn1;
  Conv2dLayer conv2;
  BatchNormLayer bn2;
  // Present when the block changes stride or width.
  std::optional<Conv2dLayer> shortcut_conv;
  std::optional<BatchNormLayer> shortcut_bn;

  Tensor forward(const Tensor& x, Mode mode, bool update_stats);
};

class StreamWeights {
 public:
  StreamWeights() = default;
  StreamWeights(StreamWeights&&) = default;
  StreamWeights& operator=(StreamWeights&&) = default;
  StreamWeights(const StreamWeights&) = delete;
  StreamWeights& operator=(const StreamWeights&) = delete;

  StreamConfig config;
  Dtype dtype = Dtype::f32;
  Conv2dLayer stem_conv;
  BatchNormLayer stem_bn;
  std::array<std::vector<ResidualBlock>, 4> stages;
  int feature_dim = 0;
  // Cleared while the stream is frozen; a frozen stream then normalises with
  // its running statistics in both modes.
  bool update_running_stats = true;

  std::vector<NamedTensor> parameters(const std::string& prefix = "") const;
  std::vector<NamedTensor> buffers(const std::string& prefix = "") const;
  std::size_t parameter_count() const;

  StreamWeights clone() const;
};

StreamWeights build_stream(const StreamConfig& config, std::uint64_t seed,
                           Dtype dtype = Dtype::f32);

// x[N, in_channels, H, W] -> [N, feature_dim]. H, W >= 32.
Tensor stream_forward(StreamWeights& weights, const Tensor& x, Mode mode);

}  // namespace trires
