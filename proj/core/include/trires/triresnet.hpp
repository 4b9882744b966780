#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "trires/stream.hpp"

namespace trires {

// Label encoding shared by the pipeline, metrics and heatmaps.
constexpr int kBenignClass = 0;
constexpr int kMalignantClass = 1;
constexpr int kHeadHiddenWidth = 16;
constexpr int kStreamCount = 3;

struct FreezeState {
  std::array<bool, kStreamCount> streams{false, false, false};
  bool head = false;

  friend bool operator==(const FreezeState&, const FreezeState&) = default;
};

// Three residual streams whose pooled features are concatenated and fed to
// fc(3*feature_dim -> 16) -> relu -> fc(16 -> num_classes). Optional proxy
// heads (feature_dim -> num_classes) serve per-stream pretraining.
class TriResNetModel {
 public:
  TriResNetModel() = default;
  TriResNetModel(TriResNetModel&&) = default;
  TriResNetModel& operator=(TriResNetModel&&) = default;
  TriResNetModel(const TriResNetModel&) = delete;
  TriResNetModel& operator=(const TriResNetModel&) = delete;

  StreamConfig config;
  int num_classes = 2;
  Dtype dtype = Dtype::f32;
  std::array<std::uint64_t, kStreamCount> stream_seeds{};
  std::uint64_t head_seed = 0;

  std::array<StreamWeights, kStreamCount> streams;
  LinearLayer head_fc1;
  LinearLayer head_fc2;
  std::array<std::optional<LinearLayer>, kStreamCount> proxy_heads;

  int feature_dim() const { return streams[0].feature_dim; }

  // [N, 3 * feature_dim] concatenation of the three stream outputs.
  Tensor features(const Tensor& x, Mode mode);
  Tensor forward(const Tensor& x, Mode mode);
  // Evaluates only stream `stream_idx` and its proxy head. StateError when no
  // proxy head is attached there.
  Tensor forward_proxy(int stream_idx, const Tensor& x, Mode mode);

  void attach_proxy_head(int stream_idx, std::uint64_t seed);
  void detach_proxy_head(int stream_idx);
  bool has_proxy_head(int stream_idx) const;

  // Frozen parameters stop tracking gradients. Frozen streams stop updating
  // batch-norm running statistics and normalise with them in train mode too,
  // so a frozen stream computes its eval-mode features in either mode.
  void set_stream_frozen(int stream_idx, bool frozen);
  void set_head_frozen(bool frozen);
  const FreezeState& freeze_state() const { return freeze_; }
  void set_freeze_state(const FreezeState& state);

  // Softmax probability of the malignant class, eval mode, no gradients.
  std::vector<double> predict_malignancy(const Tensor& tiles);
  double predict_tile(const Tensor& tile);

  std::vector<NamedTensor> parameters() const;
  std::vector<NamedTensor> buffers() const;
  std::vector<NamedTensor> stream_parameters(int stream_idx) const;
  std::vector<NamedTensor> head_parameters() const;
  std::vector<NamedTensor> proxy_parameters(int stream_idx) const;
  // Parameters that currently track gradients.
  std::vector<Tensor> trainable_parameters() const;

  TriResNetModel clone() const;

 private:
  FreezeState freeze_;
};

TriResNetModel build_triresnet(const StreamConfig& config, int num_classes,
                               const std::array<std::uint64_t, kStreamCount>& seeds,
                               std::uint64_t head_seed, Dtype dtype = Dtype::f32);

// Probability of the malignant class for every row of [N, K] logits.
std::vector<double> malignancy_probabilities(const Tensor& logits);

void check_stream_index(int stream_idx);

}  // namespace trires
