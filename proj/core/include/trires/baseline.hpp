#pragma once

#include <cstdint>
#include <vector>

#include "trires/stream.hpp"

namespace trires {

// One residual stream followed by fc(feature_dim -> num_classes): the
// conventional single-network counterpart of TriResNetModel.
class SingleStreamModel {
 public:
  SingleStreamModel() = default;
  SingleStreamModel(SingleStreamModel&&) = default;
  SingleStreamModel& operator=(SingleStreamModel&&) = default;
  SingleStreamModel(const SingleStreamModel&) = delete;
  SingleStreamModel& operator=(const SingleStreamModel&) = delete;

  StreamConfig config;
  int num_classes = 2;
  Dtype dtype = Dtype::f32;
  std::uint64_t stream_seed = 0;
  std::uint64_t head_seed = 0;

  StreamWeights stream;
  LinearLayer fc;

  Tensor forward(const Tensor& x, Mode mode);
  std::vector<double> predict_malignancy(const Tensor& tiles);

  // Names: "stream.<...>" as in a TriResNet stream, then "fc.weight", "fc.bias".
  std::vector<NamedTensor> parameters() const;
  std::vector<NamedTensor> buffers() const;
  std::vector<Tensor> trainable_parameters() const;

  SingleStreamModel clone() const;
};

SingleStreamModel build_single_stream(const StreamConfig& config, int num_classes,
                                      std::uint64_t stream_seed, std::uint64_t head_seed,
                                      Dtype dtype = Dtype::f32);

}  // namespace trires
