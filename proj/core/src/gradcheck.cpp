#include "trires/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "trires/tape.hpp"

namespace trires {

namespace {
thread_local KinkProbe* active_probe = nullptr;
}

KinkProbe::KinkProbe() : previous_(active_probe) { active_probe = this; }
KinkProbe::~KinkProbe() { active_probe = previous_; }

bool KinkProbe::active() { return active_probe != nullptr; }

void KinkProbe::note(std::uint64_t pattern) {
  if (!active_probe) return;
  auto& s = active_probe->signature_;
  s ^= pattern;
  s *= 0x100000001b3ull;
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            double h) {
  Tensor probe = x.detach();
  Tensor grad = Tensor::zeros(x.shape(), x.dtype());
  dispatch(x.dtype(), [&]<typename T>() {
    auto p = probe.mutable_data<T>();
    auto g = grad.mutable_data<T>();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const T original = p[i];
      p[i] = static_cast<T>(original + h);
      const double up = f(probe);
      p[i] = static_cast<T>(original - h);
      const double down = f(probe);
      p[i] = original;
      g[i] = static_cast<T>((up - down) / (2.0 * h));
    }
  });
  return grad;
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

GradCheckResult check_gradients(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                                const GradCheckOptions& options) {
  GradCheckResult result;
  for (auto& p : params) p.zero_grad();

  std::uint64_t base_signature;
  {
    KinkProbe probe;
    backward(loss_fn());
    base_signature = probe.signature();
  }

  auto evaluate = [&](std::uint64_t& signature) {
    NoGradGuard guard;
    KinkProbe probe;
    const double v = loss_fn().item();
    signature = probe.signature();
    return v;
  };

  std::mt19937_64 rng(options.seed);
  for (auto& param : params) {
    const std::size_t n = param.numel();
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);
    if (options.max_entries_per_tensor > 0 && n > options.max_entries_per_tensor) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.max_entries_per_tensor);
      std::sort(indices.begin(), indices.end());
    }
    const Tensor analytic = param.grad();
    dispatch(param.dtype(), [&]<typename T>() {
      auto data = param.mutable_data<T>();
      for (std::size_t idx : indices) {
        const T original = data[idx];
        // A probe that crosses a kink is repeated with a step ten times
        // smaller; only probes that keep crossing count as kink crossings.
        double step = options.step, err = 0.0;
        bool crossed = false;
        for (int attempt = 0; attempt <= options.kink_retries; ++attempt) {
          std::uint64_t sig_up = 0, sig_down = 0;
          data[idx] = static_cast<T>(original + step);
          const double up = evaluate(sig_up);
          data[idx] = static_cast<T>(original - step);
          const double down = evaluate(sig_down);
          data[idx] = original;
          err = relative_error(analytic.value(idx), (up - down) / (2.0 * step));
          crossed = sig_up != base_signature || sig_down != base_signature;
          if (!crossed) break;
          if (attempt < options.kink_retries) {
            ++result.kink_retries;
            step /= 10.0;
          }
        }
        ++result.entries_checked;
        if (crossed) {
          ++result.kink_crossings;
          result.max_kink_rel_error = std::max(result.max_kink_rel_error, err);
        } else {
          result.max_rel_error = std::max(result.max_rel_error, err);
        }
      }
    });
  }
  for (auto& p : params) p.zero_grad();
  result.passed = result.max_rel_error <= options.tolerance &&
                  result.max_kink_rel_error <= options.kink_tolerance;
  return result;
}

}  // namespace trires
