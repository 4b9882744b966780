#include "trires/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gemm.hpp"
#include "trires/gradcheck.hpp"

namespace trires {

namespace {

using detail::Node;

void require_defined(const Tensor& t, const char* op, const char* what) {
  if (!t.defined()) throw StateError(std::string(op) + ": undefined " + what);
}

void require_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype()) {
    throw ShapeError(std::string(op) + ": mixed dtypes " + std::string(dtype_name(a.dtype())) +
                     " and " + std::string(dtype_name(b.dtype())));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + shape_str(t.shape()));
  }
}

void check_finite(const Tensor& t, const char* op, const char* what) {
  if (!numeric_checks_enabled() || !t.defined()) return;
  dispatch(t.dtype(), [&]<typename T>() {
    for (T v : t.data<T>()) {
      if (!std::isfinite(v)) {
        throw NumericError(std::string(op) + ": non-finite value in " + what);
      }
    }
  });
}

// Creates the output node. It records inputs (and later a backward rule) only
// when gradient mode is on and some input requires a gradient.
Tensor make_output(Shape shape, Dtype dtype, const char* op, std::initializer_list<Tensor> inputs) {
  auto node = std::make_shared<Node>();
  node->data = detail::make_storage(dtype, shape_numel(shape));
  node->shape = std::move(shape);
  node->dtype = dtype;
  node->op = op;
  bool needs_grad = false;
  if (GradMode::enabled()) {
    for (const auto& in : inputs) needs_grad = needs_grad || (in.defined() && in.requires_grad());
  }
  if (needs_grad) {
    node->requires_grad = true;
    for (const auto& in : inputs) {
      // Undefined optional inputs keep their slot so backward indices are stable.
      node->inputs.push_back(in.defined() ? in.node() : std::make_shared<Node>());
    }
  }
  return Tensor(std::move(node));
}

template <typename T>
std::span<T> out_data(Tensor& t) {
  return t.mutable_data<T>();
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

template <typename T>
void im2col(const T* x, std::int64_t C, std::int64_t H, std::int64_t W, std::int64_t kh,
            std::int64_t kw, std::int64_t stride, std::int64_t pad, std::int64_t Ho,
            std::int64_t Wo, T* cols) {
  const std::int64_t P = Ho * Wo;
  for (std::int64_t c = 0; c < C; ++c) {
    for (std::int64_t ki = 0; ki < kh; ++ki) {
      for (std::int64_t kj = 0; kj < kw; ++kj) {
        T* row = cols + ((c * kh + ki) * kw + kj) * P;
        for (std::int64_t oy = 0; oy < Ho; ++oy) {
          const std::int64_t iy = oy * stride - pad + ki;
          T* dst = row + oy * Wo;
          if (iy < 0 || iy >= H) {
            std::fill(dst, dst + Wo, T(0));
            continue;
          }
          const T* src = x + (c * H + iy) * W;
          for (std::int64_t ox = 0; ox < Wo; ++ox) {
            const std::int64_t ix = ox * stride - pad + kj;
            dst[ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, std::int64_t C, std::int64_t H, std::int64_t W, std::int64_t kh,
            std::int64_t kw, std::int64_t stride, std::int64_t pad, std::int64_t Ho,
            std::int64_t Wo, T* dx) {
  const std::int64_t P = Ho * Wo;
  for (std::int64_t c = 0; c < C; ++c) {
    for (std::int64_t ki = 0; ki < kh; ++ki) {
      for (std::int64_t kj = 0; kj < kw; ++kj) {
        const T* row = cols + ((c * kh + ki) * kw + kj) * P;
        for (std::int64_t oy = 0; oy < Ho; ++oy) {
          const std::int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= H) continue;
          T* dst = dx + (c * H + iy) * W;
          for (std::int64_t ox = 0; ox < Wo; ++ox) {
            const std::int64_t ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < W) dst[ix] += row[oy * Wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

RunningStats RunningStats::fresh(std::int64_t channels, Dtype dtype) {
  return RunningStats{Tensor::zeros({channels}, dtype), Tensor::full({channels}, 1.0, dtype), 0.1};
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int padding) {
  constexpr const char* op = "conv2d";
  require_defined(x, op, "input");
  require_defined(weight, op, "weight");
  require_rank(x, 4, op, "input");
  require_rank(weight, 4, op, "weight");
  require_dtype(x, weight, op);
  if (stride < 1) throw ShapeError("conv2d: stride must be positive");
  if (padding < 0) throw ShapeError("conv2d: padding must be non-negative");
  const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto Co = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != C) {
    throw ShapeError("conv2d: weight " + shape_str(weight.shape()) + " incompatible with input " +
                     shape_str(x.shape()));
  }
  if (kh > H + 2 * padding || kw > W + 2 * padding) {
    throw ShapeError("conv2d: kernel larger than padded input " + shape_str(x.shape()));
  }
  if (bias.defined()) {
    require_dtype(x, bias, op);
    if (bias.rank() != 1 || bias.dim(0) != Co) throw ShapeError("conv2d: bias must have shape [Cout]");
  }
  check_finite(x, op, "input");
  check_finite(weight, op, "weight");

  const auto Ho = window_output_extent(H, kh, stride, padding);
  const auto Wo = window_output_extent(W, kw, stride, padding);
  const std::int64_t K = C * kh * kw, P = Ho * Wo;

  Tensor out = make_output({N, Co, Ho, Wo}, x.dtype(), op, {x, weight, bias});
  dispatch(x.dtype(), [&]<typename T>() {
    auto y = out_data<T>(out);
    auto xd = x.data<T>();
    auto wd = weight.data<T>();
    std::vector<T> cols(static_cast<std::size_t>(K * P));
    for (std::int64_t n = 0; n < N; ++n) {
      im2col(xd.data() + n * C * H * W, C, H, W, kh, kw, stride, padding, Ho, Wo, cols.data());
      T* yn = y.data() + n * Co * P;
      detail::gemm_nn<T>(Co, P, K, wd.data(), cols.data(), yn);
      if (bias.defined()) {
        auto bd = bias.data<T>();
        for (std::int64_t o = 0; o < Co; ++o) {
          for (std::int64_t p = 0; p < P; ++p) yn[o * P + p] += bd[o];
        }
      }
    }
    if (!out.requires_grad()) return;
    out.node()->backward = [=](Node& self) {
      auto gy = detail::as<T>(self.adjoint);
      Node& xn = *self.inputs[0];
      Node& wn = *self.inputs[1];
      Node& bn = *self.inputs[2];
      const auto& xv = detail::as<T>(xn.data);
      const auto& wv = detail::as<T>(wn.data);
      auto gx = detail::adjoint<T>(xn);
      auto gw = detail::adjoint<T>(wn);
      auto gb = detail::adjoint<T>(bn);
      std::vector<T> col(static_cast<std::size_t>(K * P));
      for (std::int64_t n = 0; n < N; ++n) {
        const T* gyn = gy.data() + n * Co * P;
        if (!gw.empty()) {
          im2col(xv.data() + n * C * H * W, C, H, W, kh, kw, stride, padding, Ho, Wo, col.data());
          detail::gemm_nt<T>(Co, K, P, gyn, col.data(), gw.data());
        }
        if (!gx.empty()) {
          std::fill(col.begin(), col.end(), T(0));
          detail::gemm_tn<T>(K, P, Co, wv.data(), gyn, col.data());
          col2im(col.data(), C, H, W, kh, kw, stride, padding, Ho, Wo, gx.data() + n * C * H * W);
        }
        if (!gb.empty()) {
          for (std::int64_t o = 0; o < Co; ++o) {
            T acc = 0;
            for (std::int64_t p = 0; p < P; ++p) acc += gyn[o * P + p];
            gb[o] += acc;
          }
        }
      }
    };
  });
  check_finite(out, op, "output");
  return out;
}

Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    RunningStats& stats, Mode mode, const BatchNormOptions& options) {
  constexpr const char* op = "batch_norm2d";
  require_defined(x, op, "input");
  require_rank(x, 4, op, "input");
  require_dtype(x, gamma, op);
  require_dtype(x, beta, op);
  const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::int64_t HW = H * W, M = N * HW;
  if (M < 1) throw ShapeError("batch_norm2d: zero batch");
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &stats.mean, &stats.var}) {
    if (t->rank() != 1 || t->dim(0) != C) {
      throw ShapeError("batch_norm2d: per-channel tensor " + shape_str(t->shape()) +
                       " does not match channels of " + shape_str(x.shape()));
    }
  }
  check_finite(x, op, "input");
  const double eps = options.eps;

  Tensor out = make_output(x.shape(), x.dtype(), op, {x, gamma, beta});
  dispatch(x.dtype(), [&]<typename T>() {
    auto xd = x.data<T>();
    auto gd = gamma.data<T>();
    auto bd = beta.data<T>();
    auto y = out_data<T>(out);
    std::vector<T> xhat(xd.size());
    std::vector<double> invstd(static_cast<std::size_t>(C));

    for (std::int64_t c = 0; c < C; ++c) {
      double mean = 0.0, var = 0.0;
      if (mode == Mode::train) {
        for (std::int64_t n = 0; n < N; ++n) {
          const T* p = xd.data() + (n * C + c) * HW;
          for (std::int64_t i = 0; i < HW; ++i) mean += p[i];
        }
        mean /= static_cast<double>(M);
        for (std::int64_t n = 0; n < N; ++n) {
          const T* p = xd.data() + (n * C + c) * HW;
          for (std::int64_t i = 0; i < HW; ++i) {
            const double d = p[i] - mean;
            var += d * d;
          }
        }
        var /= static_cast<double>(M);
        if (options.update_running_stats) {
          auto rm = stats.mean.mutable_data<T>();
          auto rv = stats.var.mutable_data<T>();
          const double m = stats.momentum;
          const double unbiased = M > 1 ? var * M / (M - 1) : var;
          rm[c] = static_cast<T>((1.0 - m) * rm[c] + m * mean);
          rv[c] = static_cast<T>((1.0 - m) * rv[c] + m * unbiased);
        }
      } else {
        mean = stats.mean.data<T>()[c];
        var = stats.var.data<T>()[c];
      }
      const double is = 1.0 / std::sqrt(var + eps);
      invstd[c] = is;
      for (std::int64_t n = 0; n < N; ++n) {
        const std::int64_t base = (n * C + c) * HW;
        for (std::int64_t i = 0; i < HW; ++i) {
          const T h = static_cast<T>((xd[base + i] - mean) * is);
          xhat[base + i] = h;
          y[base + i] = gd[c] * h + bd[c];
        }
      }
    }
    if (!out.requires_grad()) return;
    out.node()->backward = [=, xhat = std::move(xhat), invstd = std::move(invstd)](Node& self) {
      auto gy = detail::as<T>(self.adjoint);
      Node& xn = *self.inputs[0];
      Node& gn = *self.inputs[1];
      Node& bn = *self.inputs[2];
      const auto& gam = detail::as<T>(gn.data);
      auto gx = detail::adjoint<T>(xn);
      auto gg = detail::adjoint<T>(gn);
      auto gb = detail::adjoint<T>(bn);
      for (std::int64_t c = 0; c < C; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::int64_t n = 0; n < N; ++n) {
          const std::int64_t base = (n * C + c) * HW;
          for (std::int64_t i = 0; i < HW; ++i) {
            sum_dy += gy[base + i];
            sum_dy_xhat += static_cast<double>(gy[base + i]) * xhat[base + i];
          }
        }
        if (!gg.empty()) gg[c] += static_cast<T>(sum_dy_xhat);
        if (!gb.empty()) gb[c] += static_cast<T>(sum_dy);
        if (gx.empty()) continue;
        const double g = gam[c];
        const double is = invstd[c];
        for (std::int64_t n = 0; n < N; ++n) {
          const std::int64_t base = (n * C + c) * HW;
          for (std::int64_t i = 0; i < HW; ++i) {
            double d;
            if (mode == Mode::train) {
              d = g * is / M * (M * static_cast<double>(gy[base + i]) - sum_dy - xhat[base + i] * sum_dy_xhat);
            } else {
              d = g * is * gy[base + i];
            }
            gx[base + i] += static_cast<T>(d);
          }
        }
      }
    };
  });
  check_finite(out, op, "output");
  return out;
}

Tensor relu(const Tensor& x) {
  constexpr const char* op = "relu";
  require_defined(x, op, "input");
  check_finite(x, op, "input");
  Tensor out = make_output(x.shape(), x.dtype(), op, {x});
  dispatch(x.dtype(), [&]<typename T>() {
    auto xd = x.data<T>();
    auto y = out_data<T>(out);
    for (std::size_t i = 0; i < xd.size(); ++i) y[i] = xd[i] > T(0) ? xd[i] : T(0);
    if (KinkProbe::active()) {
      std::uint64_t h = 0;
      for (std::size_t i = 0; i < xd.size(); ++i) h = mix(h, xd[i] > T(0) ? i + 1 : 0);
      KinkProbe::note(h);
    }
    if (!out.requires_grad()) return;
    out.node()->backward = [](Node& self) {
      auto gy = detail::as<T>(self.adjoint);
      Node& xn = *self.inputs[0];
      const auto& xv = detail::as<T>(xn.data);
      auto gx = detail::adjoint<T>(xn);
      for (std::size_t i = 0; i < gx.size(); ++i) {
        if (xv[i] > T(0)) gx[i] += gy[i];
      }
    };
  });
  return out;
}

Tensor max_pool2d(const Tensor& x, int kernel, int stride) {
  constexpr const char* op = "max_pool2d";
  require_defined(x, op, "input");
  require_rank(x, 4, op, "input");
  if (kernel < 1 || stride < 1) throw ShapeError("max_pool2d: kernel and stride must be positive");
  const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (kernel > H || kernel > W) {
    throw ShapeError("max_pool2d: window " + std::to_string(kernel) + " larger than input " +
                     shape_str(x.shape()));
  }
  check_finite(x, op, "input");
  const auto Ho = window_output_extent(H, kernel, stride, 0);
  const auto Wo = window_output_extent(W, kernel, stride, 0);

  Tensor out = make_output({N, C, Ho, Wo}, x.dtype(), op, {x});
  dispatch(x.dtype(), [&]<typename T>() {
    auto xd = x.data<T>();
    auto y = out_data<T>(out);
    std::vector<std::int64_t> argmax(y.size());
    for (std::int64_t plane = 0; plane < N * C; ++plane) {
      const T* src = xd.data() + plane * H * W;
      for (std::int64_t oy = 0; oy < Ho; ++oy) {
        for (std::int64_t ox = 0; ox < Wo; ++ox) {
          std::int64_t best = (oy * stride) * W + ox * stride;
          for (std::int64_t ky = 0; ky < kernel; ++ky) {
            for (std::int64_t kx = 0; kx < kernel; ++kx) {
              const std::int64_t idx = (oy * stride + ky) * W + ox * stride + kx;
              if (src[idx] > src[best]) best = idx;
            }
          }
          const std::int64_t o = (plane * Ho + oy) * Wo + ox;
          y[o] = src[best];
          argmax[o] = plane * H * W + best;
        }
      }
    }
    if (KinkProbe::active()) {
      std::uint64_t h = 0;
      for (auto a : argmax) h = mix(h, static_cast<std::uint64_t>(a));
      KinkProbe::note(h);
    }
    if (!out.requires_grad()) return;
    out.node()->backward = [argmax = std::move(argmax)](Node& self) {
      auto gy = detail::as<T>(self.adjoint);
      auto gx = detail::adjoint<T>(*self.inputs[0]);
      for (std::size_t o = 0; o < gy.size(); ++o) gx[argmax[o]] += gy[o];
    };
  });
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  constexpr const char* op = "global_avg_pool";
  require_defined(x, op, "input");
  require_rank(x, 4, op, "input");
  const auto N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (HW < 1) throw ShapeError("global_avg_pool: empty spatial extent");
  check_finite(x, op, "input");
  Tensor out = make_output({N, C}, x.dtype(), op, {x});
  dispatch(x.dtype(), [&]<typename T>() {
    auto xd = x.data<T>();
    auto y = out_data<T>(out);
    for (std::int64_t p = 0; p < N * C; ++p) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < HW; ++i) acc += xd[p * HW + i];
      y[p] = static_cast<T>(acc / static_cast<double>(HW));
    }
    if (!out.requires_grad()) return;
    out.node()->backward = [HW](Node& self) {
      auto gy = detail::as<T>(self.adjoint);
      auto gx = detail::adjoint<T>(*self.inputs[0]);
      const T scale = T(1) / static_cast<T>(HW);
      for (std::size_t p = 0; p < gy.size(); ++p) {
        const T g = gy[p] * scale;
        for (std::int64_t i = 0; i < HW; ++i) gx[p * HW + i] += g;
      }
    };
  });
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  constexpr const char* op = "linear";
  require_defined(x, op, "input");
  require_defined(weight, op, "weight");
  require_defined(bias, op, "bias");
  require_rank(x, 2, op, "input");
  require_rank(weight, 2, op, "weight");
  require_dtype(x, weight, op);
  require_dtype(x, bias, op);
  const auto N = x.dim(0), Din = x.dim(1), Dout = weight.dim(0);
  if (weight.dim(1) != Din || bias.rank() != 1 || bias.dim(0) != Dout) {
    throw ShapeError("linear: input " + shape_str(x.shape()) + ", weight " +
                     shape_str(weight.shape()) + ", bias " + shape_str(bias.shape()) +
                     " do not agree");
  }
  check_finite(x, op, "input");
  Tensor out = make_output({N, Dout}, x.dtype(), op, {x, weight, bias});
  dispatch(x.dtype(), [&]<typename T>() {
    auto y = out_data<T>(out);
    auto bd = bias.data<T>();
    for (std::int64_t n = 0; n < N; ++n) {
      std::copy(bd.begin(), bd.end(), y.begin() + n * Dout);
    }
    detail::gemm_nt<T>(N, Dout, Din, x.data<T>().data(), weight.data<T>().data(), y.data());
    if (!out.requires_grad()) return;
    out.node()->backward = [=](Node& self) {
      auto gy = detail::as<T>(self.adjoint);
      Node& xn = *self.inputs[0];
      Node& wn = *self.inputs[1];
      auto gx = detail::adjoint<T>(xn);
      auto gw = detail::adjoint<T>(wn);
      auto gb = detail::adjoint<T>(*self.inputs[2]);
      if (!gx.empty()) detail::gemm_nn<T>(N, Din, Dout, gy.data(), detail::as<T>(wn.data).data(), gx.data());
      if (!gw.empty()) detail::gemm_tn<T>(Dout, Din, N, gy.data(), detail::as<T>(xn.data).data(), gw.data());
      if (!gb.empty()) {
        for (std::int64_t n = 0; n < N; ++n) {
          for (std::int64_t o = 0; o < Dout; ++o) gb[o] += gy[n * Dout + o];
        }
      }
    };
  });
  check_finite(out, op, "output");
  return out;
}

Tensor concat_features(std::span<const Tensor> parts) {
  constexpr const char* op = "concat_features";
  if (parts.empty()) throw ShapeError("concat_features: no parts");
  const auto N = parts.front().dim(0);
  std::int64_t total = 0;
  std::vector<std::int64_t> widths;
  for (const auto& p : parts) {
    require_defined(p, op, "part");
    require_rank(p, 2, op, "part");
    require_dtype(parts.front(), p, op);
    if (p.dim(0) != N) throw ShapeError("concat_features: mismatched batch sizes");
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  auto node = std::make_shared<Node>();
  const Dtype dtype = parts.front().dtype();
  node->shape = {N, total};
  node->dtype = dtype;
  node->op = op;
  node->data = detail::make_storage(dtype, static_cast<std::size_t>(N * total));
  bool needs_grad = false;
  if (GradMode::enabled()) {
    for (const auto& p : parts) needs_grad = needs_grad || p.requires_grad();
  }
  if (needs_grad) {
    node->requires_grad = true;
    for (const auto& p : parts) node->inputs.push_back(p.node());
  }
  Tensor out(std::move(node));
  dispatch(dtype, [&]<typename T>() {
    auto y = out_data<T>(out);
    std::int64_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      auto pd = parts[k].data<T>();
      const auto w = widths[k];
      for (std::int64_t n = 0; n < N; ++n) {
        std::copy_n(pd.begin() + n * w, w, y.begin() + n * total + offset);
      }
      offset += w;
    }
    if (!out.requires_grad()) return;
    out.node()->backward = [=](Node& self) {
      auto gy = detail::as<T>(self.adjoint);
      std::int64_t off = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        const auto w = widths[k];
        auto gp = detail::adjoint<T>(*self.inputs[k]);
        if (!gp.empty()) {
          for (std::int64_t n = 0; n < N; ++n) {
            for (std::int64_t j = 0; j < w; ++j) gp[n * w + j] += gy[n * total + off + j];
          }
        }
        off += w;
      }
    };
  });
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  constexpr const char* op = "softmax_cross_entropy";
  require_defined(logits, op, "logits");
  require_rank(logits, 2, op, "logits");
  const auto N = logits.dim(0), K = logits.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != N) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(N));
  }
  if (N < 1) throw ShapeError("softmax_cross_entropy: empty batch");
  for (int l : labels) {
    if (l < 0 || l >= K) {
      throw LabelError("softmax_cross_entropy: label " + std::to_string(l) + " outside [0, " +
                       std::to_string(K) + ")");
    }
  }
  check_finite(logits, op, "logits");
  Tensor out = make_output({}, logits.dtype(), op, {logits});
  dispatch(logits.dtype(), [&]<typename T>() {
    auto z = logits.data<T>();
    std::vector<double> probs(z.size());
    double loss = 0.0;
    for (std::int64_t n = 0; n < N; ++n) {
      const T* row = z.data() + n * K;
      const double mx = *std::max_element(row, row + K);
      double denom = 0.0;
      for (std::int64_t k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
      const double log_denom = std::log(denom);
      for (std::int64_t k = 0; k < K; ++k) probs[n * K + k] = std::exp(row[k] - mx - log_denom);
      loss += -(row[labels[n]] - mx - log_denom);
    }
    out_data<T>(out)[0] = static_cast<T>(loss / static_cast<double>(N));
    if (!out.requires_grad()) return;
    std::vector<int> lab(labels.begin(), labels.end());
    out.node()->backward = [=, probs = std::move(probs), lab = std::move(lab)](Node& self) {
      const double g = detail::as<T>(self.adjoint)[0];
      auto gz = detail::adjoint<T>(*self.inputs[0]);
      for (std::int64_t n = 0; n < N; ++n) {
        for (std::int64_t k = 0; k < K; ++k) {
          const double onehot = (k == lab[n]) ? 1.0 : 0.0;
          gz[n * K + k] += static_cast<T>(g * (probs[n * K + k] - onehot) / static_cast<double>(N));
        }
      }
    };
  });
  check_finite(out, op, "output");
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  constexpr const char* op = "add";
  require_defined(a, op, "lhs");
  require_defined(b, op, "rhs");
  require_dtype(a, b, op);
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  Tensor out = make_output(a.shape(), a.dtype(), op, {a, b});
  dispatch(a.dtype(), [&]<typename T>() {
    auto ad = a.data<T>();
    auto bd = b.data<T>();
    auto y = out_data<T>(out);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] + bd[i];
    if (!out.requires_grad()) return;
    out.node()->backward = [](Node& self) {
      auto gy = detail::as<T>(self.adjoint);
      for (std::size_t k = 0; k < 2; ++k) {
        auto g = detail::adjoint<T>(*self.inputs[k]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
      }
    };
  });
  check_finite(out, op, "output");
  return out;
}

Tensor sum(const Tensor& x) {
  constexpr const char* op = "sum";
  require_defined(x, op, "input");
  Tensor out = make_output({}, x.dtype(), op, {x});
  dispatch(x.dtype(), [&]<typename T>() {
    double acc = 0.0;
    for (T v : x.data<T>()) acc += v;
    out_data<T>(out)[0] = static_cast<T>(acc);
    if (!out.requires_grad()) return;
    out.node()->backward = [](Node& self) {
      const T g = detail::as<T>(self.adjoint)[0];
      for (auto& v : detail::adjoint<T>(*self.inputs[0])) v += g;
    };
  });
  return out;
}

Tensor dot(const Tensor& a, const Tensor& b) {
  constexpr const char* op = "dot";
  require_defined(a, op, "lhs");
  require_defined(b, op, "rhs");
  require_dtype(a, b, op);
  if (a.numel() != b.numel()) throw ShapeError("dot: element counts differ");
  Tensor out = make_output({}, a.dtype(), op, {a, b});
  dispatch(a.dtype(), [&]<typename T>() {
    auto ad = a.data<T>();
    auto bd = b.data<T>();
    double acc = 0.0;
    for (std::size_t i = 0; i < ad.size(); ++i) acc += static_cast<double>(ad[i]) * bd[i];
    out_data<T>(out)[0] = static_cast<T>(acc);
    if (!out.requires_grad()) return;
    out.node()->backward = [](Node& self) {
      const T g = detail::as<T>(self.adjoint)[0];
      const auto& av = detail::as<T>(self.inputs[0]->data);
      const auto& bv = detail::as<T>(self.inputs[1]->data);
      auto ga = detail::adjoint<T>(*self.inputs[0]);
      auto gb = detail::adjoint<T>(*self.inputs[1]);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * bv[i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * av[i];
    };
  });
  return out;
}

Tensor softmax(const Tensor& logits) {
  require_defined(logits, "softmax", "logits");
  require_rank(logits, 2, "softmax", "logits");
  const auto N = logits.dim(0), K = logits.dim(1);
  Tensor out = Tensor::zeros(logits.shape(), logits.dtype());
  dispatch(logits.dtype(), [&]<typename T>() {
    auto z = logits.data<T>();
    auto y = out.mutable_data<T>();
    for (std::int64_t n = 0; n < N; ++n) {
      const T* row = z.data() + n * K;
      const double mx = *std::max_element(row, row + K);
      double denom = 0.0;
      for (std::int64_t k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
      for (std::int64_t k = 0; k < K; ++k) y[n * K + k] = static_cast<T>(std::exp(row[k] - mx) / denom);
    }
  });
  return out;
}

}  // namespace trires
