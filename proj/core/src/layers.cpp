#include "trires/layers.hpp"

#include <cmath>

namespace trires {

namespace {

template <typename Dist>
Tensor sample_tensor(Shape shape, Dist dist, Rng& rng, Dtype dtype) {
  Tensor t = Tensor::zeros(std::move(shape), dtype);
  dispatch(dtype, [&]<typename T>() {
    for (auto& v : t.mutable_data<T>()) v = static_cast<T>(dist(rng));
  });
  return t;
}

}  // namespace

Conv2dLayer make_conv(int in_channels, int out_channels, int kernel, int stride, int padding,
                      Rng& rng, Dtype dtype) {
  const double fan_in = static_cast<double>(in_channels) * kernel * kernel;
  Conv2dLayer conv;
  conv.weight = sample_tensor({out_channels, in_channels, kernel, kernel},
                              std::normal_distribution<double>(0.0, std::sqrt(2.0 / fan_in)), rng,
                              dtype);
  conv.weight.set_requires_grad(true);
  conv.stride = stride;
  conv.padding = padding;
  return conv;
}

BatchNormLayer make_batch_norm(int channels, Dtype dtype) {
  BatchNormLayer bn;
  bn.gamma = Tensor::full({channels}, 1.0, dtype);
  bn.beta = Tensor::zeros({channels}, dtype);
  bn.gamma.set_requires_grad(true);
  bn.beta.set_requires_grad(true);
  bn.stats = RunningStats::fresh(channels, dtype);
  return bn;
}

LinearLayer make_linear(int in_features, int out_features, Rng& rng, Dtype dtype) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  std::uniform_real_distribution<double> dist(-bound, bound);
  LinearLayer fc;
  fc.weight = sample_tensor({out_features, in_features}, dist, rng, dtype);
  fc.bias = sample_tensor({out_features}, dist, rng, dtype);
  fc.weight.set_requires_grad(true);
  fc.bias.set_requires_grad(true);
  return fc;
}

void append_parameters(std::vector<NamedTensor>& out, const std::string& prefix,
                       const Conv2dLayer& conv) {
  out.push_back({prefix + ".weight", conv.weight});
  if (conv.bias.defined()) out.push_back({prefix + ".bias", conv.bias});
}

void append_parameters(std::vector<NamedTensor>& out, const std::string& prefix,
                       const BatchNormLayer& bn) {
  out.push_back({prefix + ".gamma", bn.gamma});
  out.push_back({prefix + ".beta", bn.beta});
}

void append_parameters(std::vector<NamedTensor>& out, const std::string& prefix,
                       const LinearLayer& fc) {
  out.push_back({prefix + ".weight", fc.weight});
  out.push_back({prefix + ".bias", fc.bias});
}

void append_buffers(std::vector<NamedTensor>& out, const std::string& prefix,
                    const BatchNormLayer& bn) {
  out.push_back({prefix + ".running_mean", bn.stats.mean});
  out.push_back({prefix + ".running_var", bn.stats.var});
}

void copy_values(const std::vector<NamedTensor>& from, const std::vector<NamedTensor>& to) {
  if (from.size() != to.size()) throw ShapeError("copy_values: tensor lists differ in length");
  for (std::size_t i = 0; i < from.size(); ++i) {
    const Tensor& src = from[i].tensor;
    Tensor dst = to[i].tensor;
    if (src.shape() != dst.shape() || src.dtype() != dst.dtype()) {
      throw ShapeError("copy_values: layout mismatch at " + to[i].name);
    }
    dispatch(src.dtype(), [&]<typename T>() {
      auto s = src.data<T>();
      std::copy(s.begin(), s.end(), dst.mutable_data<T>().begin());
    });
  }
}

LinearLayer clone(const LinearLayer& fc) { return {fc.weight.clone(), fc.bias.clone()}; }

}  // namespace trires
