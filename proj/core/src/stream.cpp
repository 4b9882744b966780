#include "trires/stream.hpp"

#include <numeric>

namespace trires {

WidthScale parse_width_scale(const std::string& text) {
  WidthScale s;
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      s.num = std::stoi(text, &used);
      if (used != text.size()) throw ConfigError("");
      s.den = 1;
    } else {
      const std::string num = text.substr(0, slash), den = text.substr(slash + 1);
      s.num = std::stoi(num, &used);
      if (used != num.size()) throw ConfigError("");
      s.den = std::stoi(den, &used);
      if (used != den.size()) throw ConfigError("");
    }
  } catch (const std::exception&) {
    throw ConfigError("invalid width scale '" + text + "' (expected p/q)");
  }
  if (s.num < 1 || s.den < 1) throw ConfigError("width scale must be positive: '" + text + "'");
  return s;
}

std::string to_string(const WidthScale& scale) {
  return std::to_string(scale.num) + "/" + std::to_string(scale.den);
}

namespace {

int scaled(int width, const WidthScale& s) {
  return static_cast<int>(static_cast<std::int64_t>(width) * s.num / s.den);
}

}  // namespace

void validate(const StreamConfig& config) {
  for (int d : config.stage_depths) {
    if (d < 0) throw ConfigError("stage depths must be non-negative");
  }
  if (config.base_width < 1) throw ConfigError("base_width must be positive");
  if (config.in_channels < 1) throw ConfigError("in_channels must be positive");
  if (config.scale.num < 1 || config.scale.den < 1) throw ConfigError("scale must be positive");
  if (scaled(config.base_width, config.scale) < 1) {
    throw ConfigError("scaled width " + std::to_string(config.base_width) + " * " +
                      to_string(config.scale) + " is below 1");
  }
}

std::array<int, 4> stage_widths(const StreamConfig& config) {
  validate(config);
  std::array<int, 4> w{};
  for (int s = 0; s < 4; ++s) w[s] = scaled(config.base_width << s, config.scale);
  return w;
}

int stem_width(const StreamConfig& config) { return stage_widths(config)[0]; }

int feature_dim(const StreamConfig& config) {
  const auto widths = stage_widths(config);
  int channels = widths[0];
  for (int s = 0; s < 4; ++s) {
    if (config.stage_depths[s] > 0) channels = widths[s];
  }
  return channels;
}

int layer_count(const StreamConfig& config) {
  return 1 + 2 * std::accumulate(config.stage_depths.begin(), config.stage_depths.end(), 0) + 1;
}

std::size_t stream_parameter_count(const StreamConfig& config) {
  const auto widths = stage_widths(config);
  const std::size_t in = static_cast<std::size_t>(config.in_channels);
  std::size_t c = static_cast<std::size_t>(widths[0]);
  std::size_t total = c * in * 49 + 2 * c;
  for (int s = 0; s < 4; ++s) {
    const std::size_t w = static_cast<std::size_t>(widths[s]);
    for (int b = 0; b < config.stage_depths[s]; ++b) {
      const bool downsample = (b == 0 && s > 0);
      total += c * w * 9 + 2 * w + w * w * 9 + 2 * w;
      if (downsample || c != w) total += c * w + 2 * w;
      c = w;
    }
  }
  return total;
}

std::size_t stream_buffer_count(const StreamConfig& config) {
  // Every batch-norm contributes 2 gamma/beta parameters and 2 running stats
  // per channel, so buffers mirror the batch-norm share of the parameters.
  const auto widths = stage_widths(config);
  std::size_t c = static_cast<std::size_t>(widths[0]);
  std::size_t total = 2 * c;
  for (int s = 0; s < 4; ++s) {
    const std::size_t w = static_cast<std::size_t>(widths[s]);
    for (int b = 0; b < config.stage_depths[s]; ++b) {
      const bool downsample = (b == 0 && s > 0);
      total += 4 * w;
      if (downsample || c != w) total += 2 * w;
      c = w;
    }
  }
  return total;
}

std::int64_t stream_output_extent(const StreamConfig& config, std::int64_t input_extent) {
  std::int64_t e = window_output_extent(input_extent, 7, 2, 3);
  e = window_output_extent(e, 3, 2, 0);
  for (int s = 1; s < 4; ++s) {
    if (config.stage_depths[s] > 0) e = window_output_extent(e, 3, 2, 1);
  }
  return e;
}

Tensor ResidualBlock::forward(const Tensor& x, Mode mode, bool update_stats) {
  Tensor out = relu(bn1.forward(conv1.forward(x), mode, update_stats));
  out = bn2.forward(conv2.forward(out), mode, update_stats);
  Tensor shortcut = x;
  if (shortcut_conv) shortcut = shortcut_bn->forward(shortcut_conv->forward(x), mode, update_stats);
  return relu(add(out, shortcut));
}

std::vector<NamedTensor> StreamWeights::parameters(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  append_parameters(out, prefix + "stem.conv", stem_conv);
  append_parameters(out, prefix + "stem.bn", stem_bn);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    for (std::size_t b = 0; b < stages[s].size(); ++b) {
      const auto& blk = stages[s][b];
      const std::string p = prefix + "stage" + std::to_string(s + 1) + ".block" + std::to_string(b) + ".";
      append_parameters(out, p + "conv1", blk.conv1);
      append_parameters(out, p + "bn1", blk.bn1);
      append_parameters(out, p + "conv2", blk.conv2);
      append_parameters(out, p + "bn2", blk.bn2);
      if (blk.shortcut_conv) {
        append_parameters(out, p + "shortcut.conv", *blk.shortcut_conv);
        append_parameters(out, p + "shortcut.bn", *blk.shortcut_bn);
      }
    }
  }
  return out;
}

std::vector<NamedTensor> StreamWeights::buffers(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  append_buffers(out, prefix + "stem.bn", stem_bn);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    for (std::size_t b = 0; b < stages[s].size(); ++b) {
      const auto& blk = stages[s][b];
      const std::string p = prefix + "stage" + std::to_string(s + 1) + ".block" + std::to_string(b) + ".";
      append_buffers(out, p + "bn1", blk.bn1);
      append_buffers(out, p + "bn2", blk.bn2);
      if (blk.shortcut_bn) append_buffers(out, p + "shortcut.bn", *blk.shortcut_bn);
    }
  }
  return out;
}

std::size_t StreamWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.numel();
  return n;
}

StreamWeights StreamWeights::clone() const {
  StreamWeights copy = build_stream(config, 0, dtype);
  copy_values(parameters(), copy.parameters());
  copy_values(buffers(), copy.buffers());
  copy.update_running_stats = update_running_stats;
  return copy;
}

StreamWeights build_stream(const StreamConfig& config, std::uint64_t seed, Dtype dtype) {
  const auto widths = stage_widths(config);
  Rng rng(seed);
  StreamWeights w;
  w.config = config;
  w.dtype = dtype;
  w.stem_conv = make_conv(config.in_channels, widths[0], 7, 2, 3, rng, dtype);
  w.stem_bn = make_batch_norm(widths[0], dtype);
  int channels = widths[0];
  for (int s = 0; s < 4; ++s) {
    for (int b = 0; b < config.stage_depths[s]; ++b) {
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      ResidualBlock blk;
      blk.conv1 = make_conv(channels, widths[s], 3, stride, 1, rng, dtype);
      blk.bn1 = make_batch_norm(widths[s], dtype);
      blk.conv2 = make_conv(widths[s], widths[s], 3, 1, 1, rng, dtype);
      blk.bn2 = make_batch_norm(widths[s], dtype);
      if (stride != 1 || channels != widths[s]) {
        blk.shortcut_conv = make_conv(channels, widths[s], 1, stride, 0, rng, dtype);
        blk.shortcut_bn = make_batch_norm(widths[s], dtype);
      }
      w.stages[s].push_back(std::move(blk));
      channels = widths[s];
    }
  }
  w.feature_dim = channels;
  return w;
}

Tensor stream_forward(StreamWeights& weights, const Tensor& x, Mode mode) {
  if (x.rank() != 4 || x.dim(1) != weights.config.in_channels) {
    throw ShapeError("stream_forward: expected [N, " + std::to_string(weights.config.in_channels) +
                     ", H, W], got " + shape_str(x.shape()));
  }
  if (x.dim(2) < kMinStreamInput || x.dim(3) < kMinStreamInput) {
    throw ShapeError("stream_forward: input " + shape_str(x.shape()) + " smaller than 32x32");
  }
  const bool update = weights.update_running_stats;
  // A frozen stream normalises with its running statistics even in train
  // mode, so features seen while training a head match those at evaluation.
  const Mode bn_mode = update ? mode : Mode::eval;
  Tensor h = relu(weights.stem_bn.forward(weights.stem_conv.forward(x), bn_mode, update));
  h = max_pool2d(h, 3, 2);
  for (auto& stage : weights.stages) {
    for (auto& blk : stage) h = blk.forward(h, bn_mode, update);
  }
  return global_avg_pool(h);
}

}  // namespace trires
