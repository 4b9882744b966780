#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "trires/baseline.hpp"
#include "trires/checkpoint.hpp"
#include "trires/serialize.hpp"
#include "trires/tape.hpp"
#include "trires/triresnet.hpp"

namespace trires {
namespace {

using testing::random_tensor;
using testing::tiny_config;

std::size_t element_total(const std::vector<NamedTensor>& tensors) {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.tensor.numel();
  return n;
}

TEST(StreamConfig, DefaultLayoutHasThirtyFourLayers) {
  const StreamConfig cfg;
  EXPECT_EQ(layer_count(cfg), 34);
  EXPECT_EQ(stage_widths(cfg), (std::array<int, 4>{64, 128, 256, 512}));
  EXPECT_EQ(feature_dim(cfg), 512);
  EXPECT_EQ(stem_width(cfg), 64);
  EXPECT_EQ(stream_output_extent(cfg, 224), 7);
  EXPECT_EQ(stream_output_extent(cfg, 32), 1);
}

TEST(StreamConfig, ParameterCountMatchesReferenceResNet34Trunk) {
  // The torchvision resnet34 has 21,797,672 parameters; dropping its
  // 512 x 1000 classifier (513,000) leaves the convolutional trunk.
  EXPECT_EQ(stream_parameter_count(StreamConfig{}), 21797672u - 513000u);
}

TEST(StreamConfig, ScaleDividesWidths) {
  const StreamConfig cfg = tiny_config();
  EXPECT_EQ(stage_widths(cfg), (std::array<int, 4>{8, 16, 32, 64}));
  EXPECT_EQ(layer_count(cfg), 10);
  EXPECT_EQ(parse_width_scale("1/8"), (WidthScale{1, 8}));
  EXPECT_EQ(parse_width_scale("3"), (WidthScale{3, 1}));
  EXPECT_EQ(to_string(WidthScale{1, 4}), "1/4");
  EXPECT_THROW(parse_width_scale("0.125"), ConfigError);
  EXPECT_THROW(parse_width_scale("0/1"), ConfigError);
  EXPECT_THROW(parse_width_scale("1/0"), ConfigError);
}

TEST(StreamConfig, ValidateRejectsUnusableLayouts) {
  StreamConfig cfg;
  cfg.stage_depths = {1, -1, 1, 1};
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = StreamConfig{};
  cfg.base_width = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = StreamConfig{};
  cfg.scale = {1, 128};
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(Stream, ParameterEnumerationMatchesLayoutFormula) {
  for (const auto& depths : {std::array<int, 4>{1, 1, 1, 1}, std::array<int, 4>{2, 1, 3, 1},
                             std::array<int, 4>{1, 0, 0, 0}}) {
    StreamConfig cfg = tiny_config();
    cfg.stage_depths = depths;
    const StreamWeights s = build_stream(cfg, 3);
    EXPECT_EQ(element_total(s.parameters()), stream_parameter_count(cfg));
    EXPECT_EQ(s.parameter_count(), stream_parameter_count(cfg));
    EXPECT_EQ(element_total(s.buffers()), stream_buffer_count(cfg));
    EXPECT_EQ(s.feature_dim, feature_dim(cfg));
  }
}

TEST(Stream, InitialisationIsAFunctionOfTheSeed) {
  const auto a = build_stream(tiny_config(), 5), b = build_stream(tiny_config(), 5),
             c = build_stream(tiny_config(), 6);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_EQ(pa[i].tensor.values(), pb[i].tensor.values());
    any_diff |= pa[i].tensor.values() != pc[i].tensor.values();
  }
  EXPECT_TRUE(any_diff);
}

// Eval-mode forward composed by hand from the raw weights.
Tensor reference_forward(const StreamWeights& s, const Tensor& x) {
  auto bn = [](const BatchNormLayer& l, const Tensor& t) {
    RunningStats stats{l.stats.mean.clone(), l.stats.var.clone(), l.stats.momentum};
    return batch_norm2d(t, l.gamma, l.beta, stats, Mode::eval);
  };
  auto conv = [](const Conv2dLayer& c, const Tensor& t) { return conv2d(t, c.weight, c.bias, c.stride, c.padding); };
  Tensor h = max_pool2d(relu(bn(s.stem_bn, conv(s.stem_conv, x))), 3, 2);
  for (const auto& stage : s.stages)
    for (const auto& blk : stage) {
      Tensor out = bn(blk.bn2, conv(blk.conv2, relu(bn(blk.bn1, conv(blk.conv1, h)))));
      Tensor sc = blk.shortcut_conv ? bn(*blk.shortcut_bn, conv(*blk.shortcut_conv, h)) : h;
      h = relu(add(out, sc));
    }
  return global_avg_pool(h);
}

TEST(Stream, ForwardEqualsHandComposition) {
  StreamWeights s = build_stream(tiny_config(), 9, Dtype::f64);
  const Tensor x = random_tensor({2, 3, 40, 40}, 4, Dtype::f64, 0.0, 1.0);
  const Tensor y = stream_forward(s, x, Mode::eval);
  ASSERT_EQ(y.shape(), (Shape{2, 64}));
  EXPECT_EQ(y.values(), reference_forward(s, x).values());
}

TEST(Stream, DownsamplingBlocksCarryProjectionShortcuts) {
  const StreamWeights s = build_stream(tiny_config(), 1);
  EXPECT_FALSE(s.stages[0][0].shortcut_conv.has_value());
  for (int st = 1; st < 4; ++st) {
    ASSERT_TRUE(s.stages[st][0].shortcut_conv.has_value());
    EXPECT_EQ(s.stages[st][0].shortcut_conv->stride, 2);
    EXPECT_EQ(s.stages[st][0].shortcut_conv->weight.dim(2), 1);
  }
  EXPECT_EQ(s.stem_conv.weight.shape(), (Shape{8, 3, 7, 7}));
  EXPECT_EQ(s.stem_conv.stride, 2);
}

TEST(Stream, OutputShapeOverInputSweep) {
  StreamWeights s = build_stream(tiny_config(), 2);
  for (int side : {32, 33, 48, 64, 97}) {
    const Tensor y = stream_forward(s, random_tensor({2, 3, side, side}, side, Dtype::f32, 0, 1), Mode::eval);
    EXPECT_EQ(y.shape(), (Shape{2, 64})) << side;
  }
  EXPECT_THROW(stream_forward(s, Tensor::zeros({1, 3, 31, 32}), Mode::eval), ShapeError);
  EXPECT_THROW(stream_forward(s, Tensor::zeros({1, 1, 32, 32}), Mode::eval), ShapeError);
}

TriResNetModel tiny_model(Dtype dtype = Dtype::f32, std::uint64_t s = 10) {
  return build_triresnet(tiny_config(), 2, {s + 1, s + 2, s + 3}, s + 4, dtype);
}

TEST(TriResNet, HeadConsumesConcatenatedStreamFeatures) {
  TriResNetModel m = tiny_model(Dtype::f64);
  EXPECT_EQ(m.feature_dim(), 64);
  EXPECT_EQ(m.head_fc1.weight.shape(), (Shape{kHeadHiddenWidth, 3 * 64}));
  EXPECT_EQ(m.head_fc2.weight.shape(), (Shape{2, kHeadHiddenWidth}));

  const Tensor x = random_tensor({3, 3, 32, 32}, 1, Dtype::f64, 0, 1);
  const Tensor f = m.features(x, Mode::eval);
  ASSERT_EQ(f.shape(), (Shape{3, 192}));
  for (int i = 0; i < 3; ++i) {
    const Tensor part = stream_forward(m.streams[i], x, Mode::eval);
    for (int n = 0; n < 3; ++n)
      for (int k = 0; k < 64; ++k) EXPECT_EQ(f.value(n * 192 + i * 64 + k), part.value(n * 64 + k));
  }
  const Tensor logits = m.forward(x, Mode::eval);
  const Tensor manual = linear(relu(linear(f, m.head_fc1.weight, m.head_fc1.bias)), m.head_fc2.weight, m.head_fc2.bias);
  EXPECT_EQ(logits.values(), manual.values());

  const auto p = m.predict_malignancy(x);
  const Tensor sm = softmax(logits);
  for (int n = 0; n < 3; ++n) EXPECT_EQ(p[n], sm.value(n * 2 + kMalignantClass));
}

TEST(TriResNet, PredictTileRequiresSingleTile) {
  TriResNetModel m = tiny_model();
  const double p = m.predict_tile(random_tensor({1, 3, 32, 32}, 3, Dtype::f32, 0, 1));
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
  EXPECT_THROW(m.predict_tile(Tensor::zeros({2, 3, 32, 32})), ShapeError);
}

TEST(TriResNet, RejectsSingleClassHead) {
  EXPECT_THROW(build_triresnet(tiny_config(), 1, {1, 2, 3}, 4), ConfigError);
}

TEST(TriResNet, ProxyHeadLifecycle) {
  TriResNetModel m = tiny_model();
  const Tensor x = random_tensor({2, 3, 32, 32}, 3, Dtype::f32, 0, 1);
  EXPECT_THROW(m.forward_proxy(0, x, Mode::eval), StateError);
  m.attach_proxy_head(1, 77);
  EXPECT_TRUE(m.has_proxy_head(1));
  EXPECT_THROW(m.attach_proxy_head(1, 77), StateError);
  EXPECT_EQ(m.forward_proxy(1, x, Mode::eval).shape(), (Shape{2, 2}));
  EXPECT_EQ(m.proxy_parameters(1).size(), 2u);
  m.detach_proxy_head(1);
  EXPECT_FALSE(m.has_proxy_head(1));
  EXPECT_THROW(m.detach_proxy_head(1), StateError);
  EXPECT_THROW(m.attach_proxy_head(3, 1), StateError);
  EXPECT_THROW(m.has_proxy_head(-1), StateError);
}

TEST(TriResNet, FreezingStopsGradientsButNotForwardValues) {
  TriResNetModel m = tiny_model();
  const Tensor x = random_tensor({2, 3, 32, 32}, 3, Dtype::f32, 0, 1);
  const auto before = m.forward(x, Mode::eval).values();
  const std::size_t all = m.trainable_parameters().size();
  m.set_stream_frozen(1, true);
  m.set_head_frozen(true);
  EXPECT_EQ(m.freeze_state(), (FreezeState{{false, true, false}, true}));
  EXPECT_EQ(m.trainable_parameters().size(), all - m.stream_parameters(1).size() - m.head_parameters().size());
  EXPECT_EQ(m.forward(x, Mode::eval).values(), before);

  const int labels[] = {0, 1};
  backward(softmax_cross_entropy(m.forward(x, Mode::train), labels));
  for (const auto& p : m.stream_parameters(1)) EXPECT_FALSE(p.tensor.requires_grad()) << p.name;
  for (const auto& p : m.stream_parameters(0)) EXPECT_TRUE(p.tensor.node()->grad_written) << p.name;
}

TEST(TriResNet, FrozenStreamKeepsRunningStatistics) {
  TriResNetModel m = tiny_model();
  m.set_stream_frozen(2, true);
  const auto frozen = m.streams[2].buffers();
  std::vector<std::vector<double>> snap;
  for (const auto& b : frozen) snap.push_back(b.tensor.values());
  const auto live_before = m.streams[0].buffers().front().tensor.values();
  m.forward(random_tensor({2, 3, 32, 32}, 3, Dtype::f32, 0, 1), Mode::train);
  for (std::size_t i = 0; i < frozen.size(); ++i) EXPECT_EQ(frozen[i].tensor.values(), snap[i]);
  EXPECT_NE(m.streams[0].buffers().front().tensor.values(), live_before);
}

TEST(TriResNet, FrozenStreamComputesEvalFeaturesInTrainMode) {
  TriResNetModel m = tiny_model(Dtype::f64);
  const Tensor x = random_tensor({4, 3, 32, 32}, 6, Dtype::f64, 0, 1);
  m.forward(x, Mode::train);  // move the running statistics
  EXPECT_NE(stream_forward(m.streams[1], x, Mode::train).values(), stream_forward(m.streams[1], x, Mode::eval).values());
  m.set_stream_frozen(1, true);
  EXPECT_EQ(stream_forward(m.streams[1], x, Mode::train).values(), stream_forward(m.streams[1], x, Mode::eval).values());
}

TEST(TriResNet, CloneIsIndependent) {
  TriResNetModel m = tiny_model();
  m.attach_proxy_head(0, 5);
  m.set_stream_frozen(0, true);
  TriResNetModel c = m.clone();
  const Tensor x = random_tensor({2, 3, 32, 32}, 3, Dtype::f32, 0, 1);
  EXPECT_EQ(c.forward(x, Mode::eval).values(), m.forward(x, Mode::eval).values());
  EXPECT_EQ(c.freeze_state(), m.freeze_state());
  EXPECT_TRUE(c.has_proxy_head(0));
  c.head_fc2.bias.mutable_data<float>()[0] += 1.0f;
  EXPECT_NE(c.forward(x, Mode::eval).values(), m.forward(x, Mode::eval).values());
}

TEST(TriResNet, ParameterNamesAreUniqueAndPrefixed) {
  TriResNetModel m = tiny_model();
  std::set<std::string> names;
  for (const auto& p : m.parameters()) EXPECT_TRUE(names.insert(p.name).second) << p.name;
  for (int i = 0; i < 3; ++i)
    for (const auto& p : m.stream_parameters(i)) EXPECT_EQ(p.name.rfind("stream" + std::to_string(i) + ".", 0), 0u);
}

TEST(Baseline, ParametersAreOneStreamPlusOwnHead) {
  TriResNetModel tri = tiny_model();
  SingleStreamModel base = build_single_stream(tiny_config(), 2, 11, 15);
  std::map<std::string, Shape> stream0;
  for (const auto& p : tri.stream_parameters(0)) stream0[p.name.substr(std::string("stream0.").size())] = p.tensor.shape();
  std::size_t from_stream = 0;
  for (const auto& p : base.parameters()) {
    if (p.name.rfind("stream.", 0) == 0) {
      const auto it = stream0.find(p.name.substr(7));
      ASSERT_NE(it, stream0.end()) << p.name;
      EXPECT_EQ(it->second, p.tensor.shape());
      ++from_stream;
    } else {
      EXPECT_TRUE(p.name == "fc.weight" || p.name == "fc.bias") << p.name;
    }
  }
  EXPECT_EQ(from_stream, stream0.size());
  EXPECT_EQ(base.fc.weight.shape(), (Shape{2, 64}));
  // Same seed, same stream weights.
  const auto a = base.stream.parameters(), b = tri.streams[0].parameters();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].tensor.values(), b[i].tensor.values());
  EXPECT_THROW(build_single_stream(tiny_config(), 1, 1, 2), ConfigError);
}

class CheckpointTest : public ::testing::Test {
 protected:
  testing::TempDir dir;
};

TEST_F(CheckpointTest, RoundTripReproducesLogitsBitIdentically) {
  for (Dtype dt : {Dtype::f32, Dtype::f64}) {
    TriResNetModel m = tiny_model(dt, 40);
    const Tensor x = random_tensor({3, 3, 32, 32}, 8, dt, 0, 1);
    m.forward(x, Mode::train);  // move running statistics off their initial values
    m.attach_proxy_head(2, 9);
    m.set_freeze_state({{true, false, true}, false});
    const auto path = dir / "m.trn";
    save_checkpoint(m, path);
    TriResNetModel back = load_checkpoint(path);
    EXPECT_EQ(back.forward(x, Mode::eval).values(), m.forward(x, Mode::eval).values());
    EXPECT_EQ(back.freeze_state(), m.freeze_state());
    EXPECT_TRUE(back.has_proxy_head(2));
    EXPECT_EQ(back.forward_proxy(2, x, Mode::eval).values(), m.forward_proxy(2, x, Mode::eval).values());
    EXPECT_EQ(back.stream_seeds, m.stream_seeds);
    EXPECT_EQ(back.dtype, dt);
    EXPECT_FALSE(std::filesystem::exists(dir / "m.trn.partial"));
  }
}

TEST_F(CheckpointTest, FileSizeIsHeaderPlusSerializedTensors) {
  TriResNetModel m = tiny_model();
  const auto path = dir / "m.trn";
  save_checkpoint(m, path);
  const CheckpointInfo info = read_checkpoint_info(path);
  std::uint64_t payload = 0;
  for (const auto& p : m.parameters()) payload += serialized_size(p.tensor);
  for (const auto& b : m.buffers()) payload += serialized_size(b.tensor);
  EXPECT_EQ(std::filesystem::file_size(path), info.payload_offset + payload);
  EXPECT_EQ(info.tensors.size(), m.parameters().size() + m.buffers().size());
  EXPECT_EQ(info.architecture, "triresnet");
  EXPECT_EQ(info.config, tiny_config());

  std::ifstream in(path, std::ios::binary);
  std::string magic;
  std::getline(in, magic);
  EXPECT_EQ(magic, "TRN1");
}

TEST_F(CheckpointTest, RejectsTruncatedAndForeignFiles) {
  TriResNetModel m = tiny_model();
  const auto path = dir / "m.trn";
  save_checkpoint(m, path);
  const auto size = std::filesystem::file_size(path);
  for (auto cut : {size - 1, size / 2, std::uintmax_t{3}}) {
    std::filesystem::copy_file(path, dir / "cut.trn", std::filesystem::copy_options::overwrite_existing);
    std::filesystem::resize_file(dir / "cut.trn", cut);
    EXPECT_THROW(load_checkpoint(dir / "cut.trn"), FormatError) << cut;
  }
  {
    std::ofstream out(dir / "junk.trn", std::ios::binary);
    out << "PK\x03\x04 not a checkpoint";
  }
  EXPECT_THROW(read_checkpoint_info(dir / "junk.trn"), FormatError);
  EXPECT_THROW(load_single_stream_checkpoint(path), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "missing.trn"), IoError);
}

TEST_F(CheckpointTest, SingleStreamRoundTripAndVariantLoad) {
  SingleStreamModel m = build_single_stream(tiny_config(), 2, 3, 4, Dtype::f64);
  const Tensor x = random_tensor({2, 3, 32, 32}, 8, Dtype::f64, 0, 1);
  m.forward(x, Mode::train);
  save_checkpoint(m, dir / "b.trn");
  SingleStreamModel back = load_single_stream_checkpoint(dir / "b.trn");
  EXPECT_EQ(back.forward(x, Mode::eval).values(), m.forward(x, Mode::eval).values());
  EXPECT_THROW(load_checkpoint(dir / "b.trn"), FormatError);
  auto any = load_any_checkpoint(dir / "b.trn");
  EXPECT_TRUE(std::holds_alternative<SingleStreamModel>(any));
}

TEST_F(CheckpointTest, FailedSaveReportsIoError) {
  TriResNetModel m = tiny_model();
  EXPECT_THROW(save_checkpoint(m, dir / "no" / "such" / "dir" / "m.trn"), IoError);
}

}  // namespace
}  // namespace trires
