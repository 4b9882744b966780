#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "trires/ops.hpp"
#include "trires/stream.hpp"
#include "trires/synthetic.hpp"
#include "trires/tensor.hpp"

namespace trires::testing {

// Depth one per stage at 1/8 width: the smallest layout that still
// exercises every downsampling block.
inline StreamConfig tiny_config() {
  StreamConfig cfg;
  cfg.stage_depths = {1, 1, 1, 1};
  cfg.scale = {1, 8};
  return cfg;
}

inline std::vector<double> uniform_values(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                          double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, Dtype dtype = Dtype::f64,
                            double lo = -1.0, double hi = 1.0, bool grad = false) {
  const auto v = uniform_values(shape_numel(shape), seed, lo, hi);
  Tensor t = Tensor::from_values(shape, v, dtype);
  if (grad) t.set_requires_grad(true);
  return t;
}

// Fresh directory under the system temp root, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("trires-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Small slide with a centred tissue ellipse and one malignant ellipse.
inline SyntheticSlideSpec small_spec(const std::string& id, std::uint64_t seed, int side = 256) {
  SyntheticSlideSpec spec;
  spec.slide_id = id;
  spec.width = spec.height = side;
  const double m = side / 16.0;
  spec.tissue = {Region::Kind::ellipse, m, m, side - 2 * m, side - 2 * m};
  spec.malignant = {{Region::Kind::ellipse, side * 0.34, side * 0.34, side * 0.32, side * 0.32}};
  spec.seed = seed;
  return spec;
}

}  // namespace trires::testing
