#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "trires/tensor.hpp"

namespace trires {

// While alive, collects a fingerprint of every piecewise-linear branch taken
// by relu and max_pool2d on this thread. Two forwards with different
// fingerprints took different branches, i.e. a perturbation crossed a kink.
class KinkProbe {
 public:
  KinkProbe();
  ~KinkProbe();
  KinkProbe(const KinkProbe&) = delete;
  KinkProbe& operator=(const KinkProbe&) = delete;

  std::uint64_t signature() const { return signature_; }
  void reset() { signature_ = kSeed; }

  // Called by operations; no-op without an active probe.
  static bool active();
  static void note(std::uint64_t pattern);

 private:
  static constexpr std::uint64_t kSeed = 0xcbf29ce484222325ull;
  std::uint64_t signature_ = kSeed;
  KinkProbe* previous_;
};

// Central-difference estimate (f(x + h e_i) - f(x - h e_i)) / 2h for every
// element of x. f receives perturbed copies; x is not modified.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            double h);

// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-3);

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-5;
  double kink_tolerance = 1e-2;
  // Entries probed per parameter tensor; tensors at most this large are
  // probed exhaustively.
  std::size_t max_entries_per_tensor = 0;  // 0 = all
  std::uint64_t seed = 1;
  // Re-probes, each with a tenfold smaller step, for an entry whose
  // perturbation crossed a kink.
  int kink_retries = 3;
};

struct GradCheckResult {
  double max_rel_error = 0.0;       // over entries whose probes stayed on one branch
  double max_kink_rel_error = 0.0;  // over entries whose probes crossed a kink
  std::size_t entries_checked = 0;
  std::size_t kink_crossings = 0;  // entries still crossing after every retry
  std::size_t kink_retries = 0;
  bool passed = false;
};

// Compares backward() of `loss_fn()` against central differences taken by
// perturbing each parameter in place.
GradCheckResult check_gradients(const std::function<Tensor()>& loss_fn,
                                std::vector<Tensor> params,
                                const GradCheckOptions& options = {});

}  // namespace trires
