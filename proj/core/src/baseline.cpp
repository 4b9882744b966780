#include "trires/baseline.hpp"

#include "trires/triresnet.hpp"

namespace trires {

SingleStreamModel build_single_stream(const StreamConfig& config, int num_classes,
                                      std::uint64_t stream_seed, std::uint64_t head_seed,
                                      Dtype dtype) {
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  validate(config);
  SingleStreamModel m;
  m.config = config;
  m.num_classes = num_classes;
  m.dtype = dtype;
  m.stream_seed = stream_seed;
  m.head_seed = head_seed;
  m.stream = build_stream(config, stream_seed, dtype);
  Rng rng(head_seed);
  m.fc = make_linear(m.stream.feature_dim, num_classes, rng, dtype);
  return m;
}

Tensor SingleStreamModel::forward(const Tensor& x, Mode mode) {
  return fc.forward(stream_forward(stream, x, mode));
}

std::vector<double> SingleStreamModel::predict_malignancy(const Tensor& tiles) {
  NoGradGuard guard;
  return malignancy_probabilities(forward(tiles, Mode::eval));
}

std::vector<NamedTensor> SingleStreamModel::parameters() const {
  auto out = stream.parameters("stream.");
  append_parameters(out, "fc", fc);
  return out;
}

std::vector<NamedTensor> SingleStreamModel::buffers() const { return stream.buffers("stream."); }

std::vector<Tensor> SingleStreamModel::trainable_parameters() const {
  std::vector<Tensor> out;
  for (const auto& p : parameters()) {
    if (p.tensor.requires_grad()) out.push_back(p.tensor);
  }
  return out;
}

SingleStreamModel SingleStreamModel::clone() const {
  SingleStreamModel c;
  c.config = config;
  c.num_classes = num_classes;
  c.dtype = dtype;
  c.stream_seed = stream_seed;
  c.head_seed = head_seed;
  c.stream = stream.clone();
  c.fc = trires::clone(fc);
  return c;
}

}  // namespace trires
