#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "fixtures.hpp"
#include "trires/gradcheck.hpp"
#include "trires/ops.hpp"
#include "trires/serialize.hpp"
#include "trires/tape.hpp"

namespace trires {
namespace {

using testing::random_tensor;

// Direct-summation convolution, independent of the im2col lowering.
std::vector<double> conv_reference(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                                   int pad) {
  const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto O = w.dim(0), K = w.dim(2);
  const auto Ho = (H + 2 * pad - K) / stride + 1, Wo = (W + 2 * pad - K) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(N * O * Ho * Wo));
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t o = 0; o < O; ++o)
      for (std::int64_t i = 0; i < Ho; ++i)
        for (std::int64_t j = 0; j < Wo; ++j) {
          double acc = b.defined() ? b.value(o) : 0.0;
          for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t p = 0; p < K; ++p)
              for (std::int64_t q = 0; q < K; ++q) {
                const auto y = i * stride - pad + p, xx = j * stride - pad + q;
                if (y < 0 || y >= H || xx < 0 || xx >= W) continue;
                acc += x.value(((n * C + c) * H + y) * W + xx) * w.value(((o * C + c) * K + p) * K + q);
              }
          out[((n * O + o) * Ho + i) * Wo + j] = acc;
        }
  return out;
}

void expect_near_all(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

TEST(Conv2d, MatchesDirectSummationAcrossGeometries) {
  std::uint64_t seed = 10;
  for (int stride : {1, 2, 3})
    for (int pad : {0, 1, 3})
      for (int k : {1, 3, 5}) {
        const Tensor x = random_tensor({2, 3, 9, 8}, ++seed);
        const Tensor w = random_tensor({4, 3, k, k}, ++seed);
        const Tensor b = random_tensor({4}, ++seed);
        const Tensor y = conv2d(x, w, b, stride, pad);
        EXPECT_EQ(y.dim(2), window_output_extent(9, k, stride, pad));
        EXPECT_EQ(y.dim(3), window_output_extent(8, k, stride, pad));
        expect_near_all(y.values(), conv_reference(x, w, b, stride, pad), 1e-12);
        expect_near_all(conv2d(x, w, Tensor(), stride, pad).values(),
                        conv_reference(x, w, Tensor(), stride, pad), 1e-12);
      }
}

TEST(Conv2d, SinglePrecisionTracksDoubleReference) {
  const Tensor x = random_tensor({1, 4, 12, 12}, 1, Dtype::f32);
  const Tensor w = random_tensor({8, 4, 3, 3}, 2, Dtype::f32);
  const Tensor y = conv2d(x, w, Tensor(), 2, 1);
  EXPECT_EQ(y.dtype(), Dtype::f32);
  expect_near_all(y.values(), conv_reference(x, w, Tensor(), 2, 1), 1e-5);
}

TEST(Conv2d, RejectsIncompatibleShapes) {
  const Tensor x = random_tensor({1, 3, 5, 5}, 1);
  EXPECT_THROW(conv2d(x, random_tensor({2, 4, 3, 3}, 2), Tensor(), 1, 0), ShapeError);
  EXPECT_THROW(conv2d(x, random_tensor({2, 3, 7, 7}, 2), Tensor(), 1, 0), ShapeError);
  EXPECT_THROW(conv2d(x, random_tensor({2, 3, 3, 3}, 2), random_tensor({3}, 3), 1, 0), ShapeError);
  EXPECT_THROW(conv2d(x, random_tensor({2, 3, 3, 3}, 2), Tensor(), 0, 0), ShapeError);
  EXPECT_THROW(conv2d(x, random_tensor({2, 3, 3, 3}, 2, Dtype::f32), Tensor(), 1, 0), ShapeError);
}

TEST(BatchNorm, TrainModeUsesBatchStatisticsAndUpdatesRunningStats) {
  const Tensor x = random_tensor({3, 2, 4, 5}, 7, Dtype::f64, -2.0, 3.0);
  const Tensor g = random_tensor({2}, 8, Dtype::f64, 0.5, 1.5);
  const Tensor b = random_tensor({2}, 9);
  RunningStats stats = RunningStats::fresh(2, Dtype::f64);
  const Tensor y = batch_norm2d(x, g, b, stats, Mode::train);

  const std::int64_t M = 3 * 4 * 5;
  for (std::int64_t c = 0; c < 2; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::int64_t n = 0; n < 3; ++n)
      for (std::int64_t i = 0; i < 20; ++i) mean += x.value((n * 2 + c) * 20 + i);
    mean /= M;
    for (std::int64_t n = 0; n < 3; ++n)
      for (std::int64_t i = 0; i < 20; ++i) var += std::pow(x.value((n * 2 + c) * 20 + i) - mean, 2);
    var /= M;
    for (std::int64_t n = 0; n < 3; ++n)
      for (std::int64_t i = 0; i < 20; ++i) {
        const auto idx = (n * 2 + c) * 20 + i;
        EXPECT_NEAR(y.value(idx), (x.value(idx) - mean) / std::sqrt(var + 1e-5) * g.value(c) + b.value(c), 1e-12);
      }
    EXPECT_NEAR(stats.mean.value(c), 0.1 * mean, 1e-12);
    EXPECT_NEAR(stats.var.value(c), 0.9 + 0.1 * var * M / (M - 1), 1e-12);
  }
}

TEST(BatchNorm, EvalModeUsesRunningStatsWithoutUpdating) {
  const Tensor x = random_tensor({2, 2, 3, 3}, 3);
  const Tensor g = random_tensor({2}, 4), b = random_tensor({2}, 5);
  RunningStats stats = RunningStats::fresh(2, Dtype::f64);
  stats.mean.mutable_data<double>()[0] = 0.25;
  stats.var.mutable_data<double>()[1] = 4.0;
  const auto mean_before = stats.mean.values(), var_before = stats.var.values();
  const Tensor y = batch_norm2d(x, g, b, stats, Mode::eval);
  for (std::int64_t i = 0; i < y.numel(); ++i) {
    const std::int64_t c = (i / 9) % 2;
    const double expect = (x.value(i) - mean_before[c]) / std::sqrt(var_before[c] + 1e-5) * g.value(c) + b.value(c);
    EXPECT_NEAR(y.value(i), expect, 1e-12);
  }
  EXPECT_EQ(stats.mean.values(), mean_before);
  EXPECT_EQ(stats.var.values(), var_before);
}

TEST(BatchNorm, FrozenStatisticsStayPutInTrainMode) {
  const Tensor x = random_tensor({2, 2, 3, 3}, 3);
  RunningStats stats = RunningStats::fresh(2, Dtype::f64);
  batch_norm2d(x, Tensor::full({2}, 1.0, Dtype::f64), Tensor::zeros({2}, Dtype::f64), stats, Mode::train,
               {1e-5, false});
  EXPECT_EQ(stats.mean.values(), std::vector<double>(2, 0.0));
  EXPECT_EQ(stats.var.values(), std::vector<double>(2, 1.0));
}

TEST(Relu, ClampsNegativesOnly) {
  const std::vector<double> v{-2.0, -0.0, 0.0, 1e-300, 3.5};
  const auto y = relu(Tensor::from_values({5}, v, Dtype::f64)).values();
  EXPECT_EQ(y, (std::vector<double>{0.0, 0.0, 0.0, 1e-300, 3.5}));
}

TEST(MaxPool, MatchesSlidingWindowMaximum) {
  const Tensor x = random_tensor({2, 3, 11, 10}, 12);
  for (int k : {2, 3})
    for (int s : {1, 2, 3}) {
      const Tensor y = max_pool2d(x, k, s);
      const auto Ho = window_output_extent(11, k, s, 0), Wo = window_output_extent(10, k, s, 0);
      ASSERT_EQ(y.shape(), (Shape{2, 3, Ho, Wo}));
      for (std::int64_t p = 0; p < 6; ++p)
        for (std::int64_t i = 0; i < Ho; ++i)
          for (std::int64_t j = 0; j < Wo; ++j) {
            double m = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < k; ++a)
              for (int c = 0; c < k; ++c) m = std::max(m, x.value((p * 11 + i * s + a) * 10 + j * s + c));
            EXPECT_EQ(y.value((p * Ho + i) * Wo + j), m);
          }
    }
  EXPECT_THROW(max_pool2d(x, 12, 1), ShapeError);
}

TEST(MaxPool, TiesRouteGradientToFirstMaximum) {
  Tensor x = Tensor::full({1, 1, 2, 2}, 1.0, Dtype::f64);
  x.set_requires_grad(true);
  backward(sum(max_pool2d(x, 2, 2)));
  EXPECT_EQ(x.grad().values(), (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
}

TEST(GlobalAvgPool, AveragesEachPlane) {
  const Tensor x = random_tensor({2, 3, 4, 5}, 2);
  const Tensor y = global_avg_pool(x);
  ASSERT_EQ(y.shape(), (Shape{2, 3}));
  for (std::int64_t p = 0; p < 6; ++p) {
    double s = 0.0;
    for (int i = 0; i < 20; ++i) s += x.value(p * 20 + i);
    EXPECT_NEAR(y.value(p), s / 20.0, 1e-14);
  }
}

TEST(Linear, MatchesNaiveProduct) {
  const Tensor x = random_tensor({5, 7}, 1), w = random_tensor({3, 7}, 2), b = random_tensor({3}, 3);
  const Tensor y = linear(x, w, b);
  ASSERT_EQ(y.shape(), (Shape{5, 3}));
  for (int n = 0; n < 5; ++n)
    for (int o = 0; o < 3; ++o) {
      double acc = b.value(o);
      for (int i = 0; i < 7; ++i) acc += x.value(n * 7 + i) * w.value(o * 7 + i);
      EXPECT_NEAR(y.value(n * 3 + o), acc, 1e-13);
    }
  EXPECT_THROW(linear(x, random_tensor({3, 6}, 2), b), ShapeError);
}

TEST(Concat, PreservesPartOrderAndGradientSplit) {
  Tensor a = random_tensor({2, 2}, 1, Dtype::f64, -1, 1, true);
  Tensor b = random_tensor({2, 3}, 2, Dtype::f64, -1, 1, true);
  const Tensor parts[] = {a, b};
  const Tensor y = concat_features(parts);
  ASSERT_EQ(y.shape(), (Shape{2, 5}));
  for (int n = 0; n < 2; ++n) {
    for (int i = 0; i < 2; ++i) EXPECT_EQ(y.value(n * 5 + i), a.value(n * 2 + i));
    for (int i = 0; i < 3; ++i) EXPECT_EQ(y.value(n * 5 + 2 + i), b.value(n * 3 + i));
  }
  const Tensor r = random_tensor({2, 5}, 3);
  backward(dot(y, r));
  for (int n = 0; n < 2; ++n) {
    for (int i = 0; i < 2; ++i) EXPECT_EQ(a.grad().value(n * 2 + i), r.value(n * 5 + i));
    for (int i = 0; i < 3; ++i) EXPECT_EQ(b.grad().value(n * 3 + i), r.value(n * 5 + 2 + i));
  }
  const Tensor bad[] = {a, random_tensor({3, 3}, 4)};
  EXPECT_THROW(concat_features(bad), ShapeError);
}

TEST(SoftmaxCrossEntropy, MatchesLogSumExp) {
  const Tensor z = random_tensor({4, 3}, 5, Dtype::f64, -30.0, 30.0);
  const int labels[] = {0, 2, 1, 2};
  double want = 0.0;
  for (int n = 0; n < 4; ++n) {
    double m = -1e300;
    for (int k = 0; k < 3; ++k) m = std::max(m, z.value(n * 3 + k));
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += std::exp(z.value(n * 3 + k) - m);
    want += m + std::log(s) - z.value(n * 3 + labels[n]);
  }
  EXPECT_NEAR(softmax_cross_entropy(z, labels).item(), want / 4.0, 1e-12);

  const int bad_label[] = {0, 3, 1, 2};
  EXPECT_THROW(softmax_cross_entropy(z, bad_label), LabelError);
  const int short_labels[] = {0, 1};
  EXPECT_THROW(softmax_cross_entropy(z, short_labels), ShapeError);
}

TEST(Softmax, RowsArePositiveAndSumToOne) {
  const Tensor p = softmax(random_tensor({6, 4}, 11, Dtype::f64, -50, 50));
  for (int n = 0; n < 6; ++n) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) {
      EXPECT_GE(p.value(n * 4 + k), 0.0);
      s += p.value(n * 4 + k);
    }
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

TEST(Add, RequiresMatchingShapesAndDtypes) {
  EXPECT_THROW(add(random_tensor({2, 3}, 1), random_tensor({3, 2}, 2)), ShapeError);
  EXPECT_THROW(add(random_tensor({2}, 1), random_tensor({2}, 2, Dtype::f32)), ShapeError);
}

TEST(NumericChecks, OffByDefaultAndRejectNonFiniteWhenOn) {
  ASSERT_FALSE(numeric_checks_enabled());
  const std::vector<double> v{1.0, std::nan("")};
  const Tensor x = Tensor::from_values({2}, v, Dtype::f64);
  EXPECT_NO_THROW(relu(x));
  set_numeric_checks(true);
  EXPECT_THROW(relu(x), NumericError);
  set_numeric_checks(false);
}

TEST(Tape, GradientsAccumulateUntilZeroed) {
  Tensor x = random_tensor({3}, 1, Dtype::f64, -1, 1, true);
  EXPECT_FALSE(x.node()->grad_written);
  backward(dot(x, x));
  EXPECT_TRUE(x.node()->grad_written);
  const auto once = x.grad().values();
  backward(dot(x, x));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(once[i], 2.0 * x.value(i), 1e-15);
    EXPECT_NEAR(x.grad().value(i), 4.0 * x.value(i), 1e-15);
  }
  x.zero_grad();
  EXPECT_FALSE(x.node()->grad_written);
  EXPECT_EQ(x.grad().values(), std::vector<double>(3, 0.0));
}

TEST(Tape, SharedSubexpressionsAreVisitedOnce) {
  Tensor x = random_tensor({2, 2}, 3, Dtype::f64, -1, 1, true);
  const Tensor h = relu(x);
  const Tensor y = sum(add(h, h));
  Tape tape = Tape::record(y);
  EXPECT_EQ(tape.operation_count(), 3u);  // relu, add, sum
  // Every entry's inputs precede it.
  const auto& entries = tape.entries();
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (const auto& in : entries[i]->inputs) {
      if (in->is_leaf()) continue;
      const auto pos = std::find(entries.begin(), entries.end(), in.get()) - entries.begin();
      EXPECT_LT(static_cast<std::size_t>(pos), i);
    }
  EXPECT_EQ(tape.backward(), 3u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(x.grad().value(i), x.value(i) > 0 ? 2.0 : 0.0);
}

TEST(Tape, NoGradGuardRecordsNothing) {
  Tensor x = random_tensor({2}, 1, Dtype::f64, -1, 1, true);
  NoGradGuard guard;
  const Tensor y = sum(relu(x));
  EXPECT_TRUE(y.is_leaf());
  EXPECT_FALSE(y.requires_grad());
}

TEST(Tape, BackwardFaultScalesOneOperation) {
  Tensor x = random_tensor({4}, 2, Dtype::f64, 0.1, 1.0, true);
  backward(sum(relu(x)));
  const auto clean = x.grad().values();
  x.zero_grad();
  set_backward_fault("relu");
  backward(sum(relu(x)));
  set_backward_fault("");
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(x.grad().value(i), 1.5 * clean[i]);
}

TEST(FiniteDifference, RecoversQuadraticGradient) {
  const Tensor x = random_tensor({5}, 4);
  const Tensor g = finite_diff_gradient([](const Tensor& p) { return dot(p, p).item(); }, x, 1e-5);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(g.value(i), 2.0 * x.value(i), 1e-9);
}

TEST(RelativeError, UsesFloorForSmallMagnitudes) {
  EXPECT_NEAR(relative_error(1.0, 1.1), 0.1 / 1.1, 1e-15);
  EXPECT_NEAR(relative_error(1e-9, 2e-9), 1e-6, 1e-18);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
}

TEST(KinkProbe, FingerprintChangesWhenReluBranchFlips) {
  auto signature_of = [](double v) {
    KinkProbe probe;
    const std::vector<double> vals{v, 1.0};
    relu(Tensor::from_values({2}, vals, Dtype::f64));
    return probe.signature();
  };
  EXPECT_EQ(signature_of(0.3), signature_of(0.7));
  EXPECT_NE(signature_of(0.3), signature_of(-0.3));
  EXPECT_FALSE(KinkProbe::active());
}

TEST(GradCheck, DetectsCorruptedBackwardRule) {
  Tensor x = random_tensor({1, 2, 5, 5}, 1, Dtype::f64, -1, 1, true);
  Tensor w = random_tensor({2, 2, 3, 3}, 2, Dtype::f64, -1, 1, true);
  const Tensor r = random_tensor({1, 2, 3, 3}, 3);
  auto loss = [=] { return dot(conv2d(x, w, Tensor(), 1, 0), r); };
  EXPECT_TRUE(check_gradients(loss, {x, w}).passed);
  set_backward_fault("conv2d");
  const auto bad = check_gradients(loss, {x, w});
  set_backward_fault("");
  EXPECT_FALSE(bad.passed);
  EXPECT_GT(bad.max_rel_error, 0.3);
}

TEST(Serialize, RoundTripsBitExactly) {
  for (Dtype dt : {Dtype::f32, Dtype::f64}) {
    const Tensor t = random_tensor({2, 3, 4}, 9, dt, -1e3, 1e3);
    std::stringstream ss;
    write_tensor(ss, t);
    EXPECT_EQ(ss.str().size(), serialized_size(t));
    const Tensor back = read_tensor(ss);
    EXPECT_EQ(back.shape(), t.shape());
    EXPECT_EQ(back.dtype(), dt);
    EXPECT_EQ(back.values(), t.values());
  }
}

TEST(Serialize, HeaderNamesShapeAndDtype) {
  EXPECT_EQ(tensor_header(Tensor::zeros({16, 192})), "shape: 16 192 / dtype: f32");
  EXPECT_EQ(serialized_size(Tensor::zeros({16, 192})), tensor_header(Tensor::zeros({16, 192})).size() + 1 + 16 * 192 * 4);
}

TEST(Serialize, RejectsTruncatedOrMalformedInput) {
  const Tensor t = random_tensor({8}, 1);
  std::stringstream ss;
  write_tensor(ss, t);
  const std::string full = ss.str();
  std::stringstream cut(full.substr(0, full.size() - 3));
  EXPECT_THROW(read_tensor(cut), FormatError);
  std::stringstream garbage("shape: two / dtype: f64\n");
  EXPECT_THROW(read_tensor(garbage), FormatError);
  std::stringstream bad_dtype("shape: 2 / dtype: f16\n0000");
  EXPECT_THROW(read_tensor(bad_dtype), FormatError);
}

}  // namespace
}  // namespace trires
