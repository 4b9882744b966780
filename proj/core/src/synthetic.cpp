#include "trires/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace trires {

bool Region::contains(double px, double py) const {
  if (kind == Kind::rect) return px >= x && px < x + w && py >= y && py < y + h;
  const double rx = w / 2.0, ry = h / 2.0;
  if (rx <= 0 || ry <= 0) return false;
  const double dx = (px - (x + rx)) / rx, dy = (py - (y + ry)) / ry;
  return dx * dx + dy * dy <= 1.0;
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform in [-1, 1), a pure function of (seed, salt, x, y).
double lattice_noise(std::uint64_t seed, std::uint64_t salt, std::int64_t x, std::int64_t y) {
  const std::uint64_t h = splitmix(seed ^ splitmix(salt ^ splitmix(static_cast<std::uint64_t>(x) * 0x1f1f1f1full ^
                                                                     static_cast<std::uint64_t>(y))));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

// Bilinear value noise on a lattice of `cell` pixels.
double smooth_noise(std::uint64_t seed, std::uint64_t salt, int x, int y, int cell) {
  const int gx = x / cell, gy = y / cell;
  const double fx = static_cast<double>(x % cell) / cell, fy = static_cast<double>(y % cell) / cell;
  const double a = lattice_noise(seed, salt, gx, gy), b = lattice_noise(seed, salt, gx + 1, gy);
  const double c = lattice_noise(seed, salt, gx, gy + 1), d = lattice_noise(seed, salt, gx + 1, gy + 1);
  return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
}

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

Rgb shade(Rgb base, double delta) {
  return {clamp8(base.r + delta), clamp8(base.g + delta), clamp8(base.b + delta)};
}

bool in_malignant(const SyntheticSlideSpec& spec, double px, double py) {
  return std::any_of(spec.malignant.begin(), spec.malignant.end(),
                     [&](const Region& r) { return r.contains(px, py); });
}

}  // namespace

void validate(const SyntheticSlideSpec& spec) {
  if (spec.slide_id.empty()) throw SpecError("slide_id must not be empty");
  if (spec.width < 16 || spec.height < 16) throw SpecError("slide extents must be at least 16x16");
  if (spec.texture_amplitude < 0) throw SpecError("texture_amplitude must be non-negative");
  for (const Region* r : {&spec.tissue}) {
    if (r->w <= 0 || r->h <= 0) throw SpecError("tissue region must have positive extent");
  }
  for (const auto& m : spec.malignant) {
    if (m.w <= 0 || m.h <= 0) throw SpecError("malignant region must have positive extent");
  }
}

SyntheticSlide generate_synthetic_slide(const SyntheticSlideSpec& spec) {
  validate(spec);
  const int W = spec.width, H = spec.height;
  RgbImage level0(W, H);
  GrayImage tissue(W, H), malignant(W, H);
  const std::uint64_t seed = spec.seed;

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const bool is_tissue = spec.tissue.contains(px, py);
      const bool is_malignant = in_malignant(spec, px, py);
      if (is_malignant && !is_tissue) {
        throw SpecError("malignant region extends outside the tissue region at (" + std::to_string(x) +
                        ", " + std::to_string(y) + ")");
      }
      Rgb c;
      if (!is_tissue) {
        const double g = 6.0 * lattice_noise(seed, 1, x, y);
        c = shade(spec.background, g);
      } else if (!is_malignant) {
        const double d = spec.texture_amplitude * smooth_noise(seed, 2, x, y, 16) +
                         0.25 * spec.texture_amplitude * lattice_noise(seed, 3, x, y);
        c = shade(spec.benign_color, d);
      } else {
        // Nuclei: one dark disc of radius ~2 in roughly half of the 6x6 cells.
        const int cx = x / 6, cy = y / 6;
        const bool has_nucleus = lattice_noise(seed, 4, cx, cy) > 0.0;
        const double ox = 6 * cx + 3 + 1.5 * lattice_noise(seed, 5, cx, cy);
        const double oy = 6 * cy + 3 + 1.5 * lattice_noise(seed, 6, cx, cy);
        const double r2 = (px - ox) * (px - ox) + (py - oy) * (py - oy);
        const double jitter = 0.5 * spec.texture_amplitude * lattice_noise(seed, 7, x, y);
        c = (has_nucleus && r2 <= 4.0) ? shade(spec.nucleus_color, jitter)
                                       : shade(spec.malignant_color, jitter);
      }
      level0.set(x, y, c);
      tissue.set(x, y, is_tissue ? 1 : 0);
      malignant.set(x, y, is_malignant ? 1 : 0);
    }
  }

  RgbImage level1 = mean_pool_2x2(mean_pool_2x2(level0));
  RgbImage level2 = mean_pool_2x2(mean_pool_2x2(level1));
  std::optional<MalignancyMask> mask;
  if (!spec.malignant.empty()) mask = MalignancyMask{0, malignant};
  auto slide = PyramidalSlide::in_memory(spec.slide_id, {std::move(level0), std::move(level1), std::move(level2)},
                                         {1, 4, 16}, std::move(mask));
  return SyntheticSlide{std::move(slide), std::move(tissue), std::move(malignant)};
}

void save_synthetic_slide(const SyntheticSlide& synthetic, const std::filesystem::path& dir) {
  save_slide(synthetic.slide, dir);
  GrayImage truth = synthetic.tissue_truth;
  for (auto& v : truth.pixels) v = v ? 255 : 0;
  write_pgm(dir / "tissue_mask_level0.pgm", truth);
}

}  // namespace trires
