#include "trires/tiles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "trires/errors.hpp"

namespace trires {

Tensor image_to_tensor(const RgbImage& image, Dtype dtype) {
  const std::int64_t H = image.height, W = image.width;
  Tensor out = Tensor::zeros({1, 3, H, W}, dtype);
  dispatch(dtype, [&]<typename T>() {
    auto d = out.mutable_data<T>();
    for (std::int64_t y = 0; y < H; ++y) {
      for (std::int64_t x = 0; x < W; ++x) {
        const auto* p = &image.pixels[static_cast<std::size_t>(y * W + x) * 3];
        for (int c = 0; c < 3; ++c) d[(c * H + y) * W + x] = static_cast<T>(p[c]) / T(255);
      }
    }
  });
  return out;
}

Tensor extract_tile(const PyramidalSlide& slide, const TileRecord& record, Dtype dtype) {
  if (record.side < 1 || record.x < 0 || record.y < 0 || record.x + record.side > slide.width() ||
      record.y + record.side > slide.height()) {
    throw BoundsError("tile (" + std::to_string(record.x) + ", " + std::to_string(record.y) +
                      ", side " + std::to_string(record.side) + ") leaves slide '" + slide.id() +
                      "'");
  }
  return image_to_tensor(slide.read_region(0, record.x, record.y, record.side, record.side),
                         dtype);
}

Tensor resize_tile(const Tensor& tile, int target) {
  if (tile.rank() != 4 || tile.dim(2) != tile.dim(3)) {
    throw ShapeError("resize_tile expects square [N, C, s, s], got " + shape_str(tile.shape()));
  }
  if (target < 1) throw ShapeError("resize_tile target must be positive");
  const std::int64_t N = tile.dim(0), C = tile.dim(1), s = tile.dim(2), t = target;
  if (t == s) return tile.detach();

  // Source coordinate of output pixel i: (i + 0.5) * s / t - 0.5, clamped.
  struct Tap {
    std::int64_t i0, i1;
    double w;
  };
  std::vector<Tap> taps(static_cast<std::size_t>(t));
  for (std::int64_t i = 0; i < t; ++i) {
    const double src = std::clamp((static_cast<double>(i) + 0.5) * static_cast<double>(s) /
                                          static_cast<double>(t) - 0.5,
                                  0.0, static_cast<double>(s - 1));
    const auto i0 = static_cast<std::int64_t>(std::floor(src));
    taps[static_cast<std::size_t>(i)] = {i0, std::min(i0 + 1, s - 1), src - static_cast<double>(i0)};
  }

  Tensor out = Tensor::zeros({N, C, t, t}, tile.dtype());
  dispatch(tile.dtype(), [&]<typename T>() {
    auto in = tile.data<T>();
    auto o = out.mutable_data<T>();
    for (std::int64_t plane = 0; plane < N * C; ++plane) {
      const T* src = in.data() + plane * s * s;
      T* dst = o.data() + plane * t * t;
      for (std::int64_t y = 0; y < t; ++y) {
        const Tap& ty = taps[static_cast<std::size_t>(y)];
        for (std::int64_t x = 0; x < t; ++x) {
          const Tap& tx = taps[static_cast<std::size_t>(x)];
          const T a = src[ty.i0 * s + tx.i0], b = src[ty.i0 * s + tx.i1];
          const T c = src[ty.i1 * s + tx.i0], d = src[ty.i1 * s + tx.i1];
          // Lerp form a + w (b - a) keeps equal endpoints exact.
          const T top = a + static_cast<T>(tx.w) * (b - a);
          const T bottom = c + static_cast<T>(tx.w) * (d - c);
          dst[y * t + x] = top + static_cast<T>(ty.w) * (bottom - top);
        }
      }
    }
  });
  return out;
}

Tensor stack_tiles(std::span<const Tensor> tiles) {
  if (tiles.empty()) throw ShapeError("stack_tiles needs at least one tile");
  const Shape& first = tiles.front().shape();
  if (first.size() != 4 || first[0] != 1) {
    throw ShapeError("stack_tiles expects [1, C, H, W] tiles, got " + shape_str(first));
  }
  for (const auto& t : tiles) {
    if (t.shape() != first || t.dtype() != tiles.front().dtype()) {
      throw ShapeError("stack_tiles: tile " + shape_str(t.shape()) + " differs from " +
                       shape_str(first));
    }
  }
  Tensor out = Tensor::zeros({static_cast<std::int64_t>(tiles.size()), first[1], first[2], first[3]},
                             tiles.front().dtype());
  dispatch(out.dtype(), [&]<typename T>() {
    auto o = out.mutable_data<T>();
    const std::size_t per = shape_numel(first);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      auto d = tiles[i].data<T>();
      std::copy(d.begin(), d.end(), o.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
  });
  return out;
}

Tensor load_batch(const SlideSet& slides, std::span<const TileRecord> records, Dtype dtype,
                  int target_side) {
  std::vector<Tensor> tiles;
  tiles.reserve(records.size());
  for (const auto& r : records) {
    const auto it = slides.find(r.slide_id);
    if (it == slides.end()) throw FormatError("manifest references unknown slide '" + r.slide_id + "'");
    Tensor t = extract_tile(it->second, r, dtype);
    if (target_side > 0 && target_side != r.side) t = resize_tile(t, target_side);
    tiles.push_back(std::move(t));
  }
  return stack_tiles(tiles);
}

}  // namespace trires
