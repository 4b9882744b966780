#include "trires/augment.hpp"

#include <algorithm>
#include <vector>

#include "trires/errors.hpp"

namespace trires {

namespace {

void require_square(const Tensor& t, const char* op) {
  if (t.rank() != 4 || t.dim(2) != t.dim(3)) {
    throw ShapeError(std::string(op) + " expects square [N, C, s, s], got " + shape_str(t.shape()));
  }
}

// Rewrites sample n of t in place: out[y][x] = in[src(y, x)] on every plane.
template <typename Index>
void remap_sample(Tensor& t, std::int64_t n, Index src) {
  const std::int64_t C = t.dim(1), s = t.dim(2);
  dispatch(t.dtype(), [&]<typename T>() {
    auto b = t.mutable_data<T>();
    std::vector<T> plane(static_cast<std::size_t>(s * s));
    for (std::int64_t c = 0; c < C; ++c) {
      T* base = b.data() + (n * C + c) * s * s;
      std::copy(base, base + s * s, plane.begin());
      for (std::int64_t y = 0; y < s; ++y) {
        for (std::int64_t x = 0; x < s; ++x) {
          const auto [sy, sx] = src(y, x);
          base[y * s + x] = plane[static_cast<std::size_t>(sy * s + sx)];
        }
      }
    }
  });
}

using Pair = std::pair<std::int64_t, std::int64_t>;

void hflip_sample(Tensor& t, std::int64_t n) {
  const std::int64_t s = t.dim(2);
  remap_sample(t, n, [s](std::int64_t y, std::int64_t x) { return Pair{y, s - 1 - x}; });
}

void vflip_sample(Tensor& t, std::int64_t n) {
  const std::int64_t s = t.dim(2);
  remap_sample(t, n, [s](std::int64_t y, std::int64_t x) { return Pair{s - 1 - y, x}; });
}

void rotate_sample(Tensor& t, std::int64_t n, int k) {
  k = ((k % 4) + 4) % 4;
  const std::int64_t s = t.dim(2);
  for (int i = 0; i < k; ++i) {
    // Clockwise quarter turn: out[y][x] = in[s-1-x][y].
    remap_sample(t, n, [s](std::int64_t y, std::int64_t x) { return Pair{s - 1 - x, y}; });
  }
}

void brighten_sample(Tensor& t, std::int64_t n, double delta) {
  const std::size_t per = t.numel() / static_cast<std::size_t>(t.dim(0));
  dispatch(t.dtype(), [&]<typename T>() {
    auto b = t.mutable_data<T>().subspan(per * static_cast<std::size_t>(n), per);
    for (auto& v : b) v = static_cast<T>(std::clamp(static_cast<double>(v) + delta, 0.0, 1.0));
  });
}

template <typename Fn>
Tensor per_sample(const Tensor& tiles, const char* op, Fn fn) {
  require_square(tiles, op);
  Tensor t = tiles.detach();
  for (std::int64_t n = 0; n < tiles.dim(0); ++n) fn(t, n);
  return t;
}

}  // namespace

Tensor flip_horizontal(const Tensor& tiles) {
  return per_sample(tiles, "flip_horizontal", hflip_sample);
}

Tensor flip_vertical(const Tensor& tiles) {
  return per_sample(tiles, "flip_vertical", vflip_sample);
}

Tensor rotate90(const Tensor& tiles, int k) {
  return per_sample(tiles, "rotate90", [k](Tensor& t, std::int64_t n) { rotate_sample(t, n, k); });
}

Tensor adjust_brightness(const Tensor& tiles, double delta) {
  return per_sample(tiles, "adjust_brightness",
                    [delta](Tensor& t, std::int64_t n) { brighten_sample(t, n, delta); });
}

Tensor augment_tile(const Tensor& tiles, const AugmentConfig& config, std::mt19937_64& rng) {
  require_square(tiles, "augment_tile");
  Tensor t = tiles.detach();
  if (!config.any()) return t;
  std::bernoulli_distribution flip(config.flip_probability);
  std::uniform_int_distribution<int> quarter(0, 3);
  std::uniform_real_distribution<double> shift(-config.brightness, config.brightness);
  for (std::int64_t n = 0; n < t.dim(0); ++n) {
    if (config.horizontal_flip && flip(rng)) hflip_sample(t, n);
    if (config.vertical_flip && flip(rng)) vflip_sample(t, n);
    if (config.rotation) rotate_sample(t, n, quarter(rng));
    if (config.brightness > 0.0) brighten_sample(t, n, shift(rng));
  }
  return t;
}

}  // namespace trires
