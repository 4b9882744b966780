#include "trires/triresnet.hpp"

namespace trires {

void check_stream_index(int stream_idx) {
  if (stream_idx < 0 || stream_idx >= kStreamCount) {
    throw StateError("stream index " + std::to_string(stream_idx) + " outside 0..2");
  }
}

namespace {

void set_tracking(const std::vector<NamedTensor>& params, bool on) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    if (t.requires_grad() != on) t.set_requires_grad(on);
  }
}

std::string stream_prefix(int i) { return "stream" + std::to_string(i) + "."; }

}  // namespace

TriResNetModel build_triresnet(const StreamConfig& config, int num_classes,
                               const std::array<std::uint64_t, kStreamCount>& seeds,
                               std::uint64_t head_seed, Dtype dtype) {
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  validate(config);
  TriResNetModel m;
  m.config = config;
  m.num_classes = num_classes;
  m.dtype = dtype;
  m.stream_seeds = seeds;
  m.head_seed = head_seed;
  for (int i = 0; i < kStreamCount; ++i) m.streams[i] = build_stream(config, seeds[i], dtype);
  Rng rng(head_seed);
  const int fd = m.streams[0].feature_dim;
  m.head_fc1 = make_linear(kStreamCount * fd, kHeadHiddenWidth, rng, dtype);
  m.head_fc2 = make_linear(kHeadHiddenWidth, num_classes, rng, dtype);
  return m;
}

Tensor TriResNetModel::features(const Tensor& x, Mode mode) {
  std::array<Tensor, kStreamCount> parts;
  for (int i = 0; i < kStreamCount; ++i) parts[i] = stream_forward(streams[i], x, mode);
  return concat_features(parts);
}

Tensor TriResNetModel::forward(const Tensor& x, Mode mode) {
  return head_fc2.forward(relu(head_fc1.forward(features(x, mode))));
}

Tensor TriResNetModel::forward_proxy(int stream_idx, const Tensor& x, Mode mode) {
  check_stream_index(stream_idx);
  if (!proxy_heads[stream_idx]) {
    throw StateError("no proxy head attached to stream " + std::to_string(stream_idx));
  }
  return proxy_heads[stream_idx]->forward(stream_forward(streams[stream_idx], x, mode));
}

void TriResNetModel::attach_proxy_head(int stream_idx, std::uint64_t seed) {
  check_stream_index(stream_idx);
  if (proxy_heads[stream_idx]) {
    throw StateError("proxy head already attached to stream " + std::to_string(stream_idx));
  }
  Rng rng(seed);
  proxy_heads[stream_idx] = make_linear(feature_dim(), num_classes, rng, dtype);
}

void TriResNetModel::detach_proxy_head(int stream_idx) {
  check_stream_index(stream_idx);
  if (!proxy_heads[stream_idx]) {
    throw StateError("no proxy head attached to stream " + std::to_string(stream_idx));
  }
  proxy_heads[stream_idx].reset();
}

bool TriResNetModel::has_proxy_head(int stream_idx) const {
  check_stream_index(stream_idx);
  return proxy_heads[stream_idx].has_value();
}

void TriResNetModel::set_stream_frozen(int stream_idx, bool frozen) {
  check_stream_index(stream_idx);
  set_tracking(stream_parameters(stream_idx), !frozen);
  streams[stream_idx].update_running_stats = !frozen;
  freeze_.streams[stream_idx] = frozen;
}

void TriResNetModel::set_head_frozen(bool frozen) {
  set_tracking(head_parameters(), !frozen);
  freeze_.head = frozen;
}

void TriResNetModel::set_freeze_state(const FreezeState& state) {
  for (int i = 0; i < kStreamCount; ++i) set_stream_frozen(i, state.streams[i]);
  set_head_frozen(state.head);
}

std::vector<double> malignancy_probabilities(const Tensor& logits) {
  const Tensor p = softmax(logits);
  const auto N = p.dim(0), K = p.dim(1);
  if (K <= kMalignantClass) throw ShapeError("logits have no malignant class column");
  std::vector<double> out(static_cast<std::size_t>(N));
  for (std::int64_t n = 0; n < N; ++n) out[n] = p.value(n * K + kMalignantClass);
  return out;
}

std::vector<double> TriResNetModel::predict_malignancy(const Tensor& tiles) {
  NoGradGuard guard;
  return malignancy_probabilities(forward(tiles, Mode::eval));
}

double TriResNetModel::predict_tile(const Tensor& tile) {
  if (tile.rank() != 4 || tile.dim(0) != 1) {
    throw ShapeError("predict_tile expects [1, C, H, W], got " + shape_str(tile.shape()));
  }
  return predict_malignancy(tile).front();
}

std::vector<NamedTensor> TriResNetModel::stream_parameters(int stream_idx) const {
  check_stream_index(stream_idx);
  return streams[stream_idx].parameters(stream_prefix(stream_idx));
}

std::vector<NamedTensor> TriResNetModel::head_parameters() const {
  std::vector<NamedTensor> out;
  append_parameters(out, "head.fc1", head_fc1);
  append_parameters(out, "head.fc2", head_fc2);
  return out;
}

std::vector<NamedTensor> TriResNetModel::proxy_parameters(int stream_idx) const {
  check_stream_index(stream_idx);
  std::vector<NamedTensor> out;
  if (proxy_heads[stream_idx]) {
    append_parameters(out, "proxy" + std::to_string(stream_idx), *proxy_heads[stream_idx]);
  }
  return out;
}

std::vector<NamedTensor> TriResNetModel::parameters() const {
  std::vector<NamedTensor> out;
  for (int i = 0; i < kStreamCount; ++i) {
    auto s = stream_parameters(i);
    out.insert(out.end(), s.begin(), s.end());
  }
  auto h = head_parameters();
  out.insert(out.end(), h.begin(), h.end());
  for (int i = 0; i < kStreamCount; ++i) {
    auto p = proxy_parameters(i);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<NamedTensor> TriResNetModel::buffers() const {
  std::vector<NamedTensor> out;
  for (int i = 0; i < kStreamCount; ++i) {
    auto b = streams[i].buffers(stream_prefix(i));
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

std::vector<Tensor> TriResNetModel::trainable_parameters() const {
  std::vector<Tensor> out;
  for (const auto& p : parameters()) {
    if (p.tensor.requires_grad()) out.push_back(p.tensor);
  }
  return out;
}

TriResNetModel TriResNetModel::clone() const {
  TriResNetModel c;
  c.config = config;
  c.num_classes = num_classes;
  c.dtype = dtype;
  c.stream_seeds = stream_seeds;
  c.head_seed = head_seed;
  for (int i = 0; i < kStreamCount; ++i) {
    c.streams[i] = streams[i].clone();
    if (proxy_heads[i]) c.proxy_heads[i] = trires::clone(*proxy_heads[i]);
  }
  c.head_fc1 = trires::clone(head_fc1);
  c.head_fc2 = trires::clone(head_fc2);
  c.set_freeze_state(freeze_);
  return c;
}

}  // namespace trires
