#include "trires/sampler.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "trires/errors.hpp"

namespace trires {

bool malignant_at(const PyramidalSlide& slide, std::int64_t x, std::int64_t y) {
  if (!slide.has_malignancy_mask()) return false;
  const auto& m = slide.malignancy_mask();
  const int d = slide.level(m.level).downsample;
  const std::int64_t u = x / d, v = y / d;
  if (x < 0 || y < 0 || u >= m.mask.width || v >= m.mask.height) return false;
  return m.mask.at(static_cast<int>(u), static_cast<int>(v)) != 0;
}

std::map<std::string, TissueMask> tissue_masks(const SlideSet& slides) {
  std::map<std::string, TissueMask> out;
  for (const auto& [id, slide] : slides) out.emplace(id, tissue_mask(slide));
  return out;
}

namespace {

// Inclusive level-0 box from which tile centres are drawn.
struct CentreBox {
  std::int64_t x0, y0, x1, y1;
};

// Valid centres keep the whole tile inside level 0: centre = top-left + s/2.
std::optional<CentreBox> valid_centres(const PyramidalSlide& slide, int side) {
  if (slide.width() < side || slide.height() < side) return std::nullopt;
  const int half = side / 2;
  return CentreBox{half, half, slide.width() - side + half, slide.height() - side + half};
}

std::optional<CentreBox> intersect(const CentreBox& a, const CentreBox& b) {
  CentreBox r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
              std::min(a.y1, b.y1)};
  if (r.x0 > r.x1 || r.y0 > r.y1) return std::nullopt;
  return r;
}

// Level-0 bounding box of the nonzero cells of a mask stored at downsample d.
std::optional<CentreBox> mask_bounds(const GrayImage& mask, int d) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return CentreBox{static_cast<std::int64_t>(x0) * d, static_cast<std::int64_t>(y0) * d,
                   static_cast<std::int64_t>(x1 + 1) * d - 1, static_cast<std::int64_t>(y1 + 1) * d - 1};
}

struct Candidate {
  const PyramidalSlide* slide;
  const TissueMask* tissue;
  CentreBox box;
};

}  // namespace

DatasetManifest sample_balanced_tiles(const SlideSet& slides,
                                      const std::map<std::string, TissueMask>& tissue, int n,
                                      std::uint64_t seed, const SamplerOptions& options) {
  if (n < 0 || n % 2 != 0) throw ConfigError("tile count must be even and non-negative");
  if (options.tile_side < 1) throw ConfigError("tile side must be positive");
  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.config = "n=" + std::to_string(n) + ";side=" + std::to_string(options.tile_side) +
                    ";budget=" + std::to_string(options.max_attempts) +
                    ";slides=" + std::to_string(slides.size());
  if (n == 0) return manifest;

  std::vector<Candidate> malignant, benign;
  for (const auto& [id, slide] : slides) {
    const auto valid = valid_centres(slide, options.tile_side);
    if (!valid) continue;
    const auto t = tissue.find(id);
    if (t == tissue.end()) throw StateError("no tissue mask for slide '" + id + "'");
    if (slide.has_malignancy_mask()) {
      const auto& m = slide.malignancy_mask();
      if (auto b = mask_bounds(m.mask, slide.level(m.level).downsample)) {
        if (auto box = intersect(*b, *valid)) malignant.push_back({&slide, &t->second, *box});
      }
    }
    if (auto b = mask_bounds(t->second.mask, t->second.downsample)) {
      if (auto box = intersect(*b, *valid)) benign.push_back({&slide, &t->second, *box});
    }
  }
  if (malignant.empty()) {
    throw SamplingExhausted("no slide has malignant area that can hold a " +
                            std::to_string(options.tile_side) + " px tile");
  }
  if (benign.empty()) throw SamplingExhausted("no slide has tissue that can hold a tile");

  std::mt19937_64 rng(seed);
  manifest.records.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    const auto& pool = label == 1 ? malignant : benign;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    bool found = false;
    for (int attempt = 0; attempt < options.max_attempts && !found; ++attempt) {
      const Candidate& c = pool[pick(rng)];
      std::uniform_int_distribution<std::int64_t> dx(c.box.x0, c.box.x1), dy(c.box.y0, c.box.y1);
      const std::int64_t cx = dx(rng), cy = dy(rng);
      const bool mal = malignant_at(*c.slide, cx, cy);
      const bool ok = label == 1 ? mal : (!mal && c.tissue->contains_level0(cx, cy));
      if (!ok) continue;
      TileRecord r;
      r.slide_id = c.slide->id();
      r.side = options.tile_side;
      r.x = static_cast<int>(cx - options.tile_side / 2);
      r.y = static_cast<int>(cy - options.tile_side / 2);
      r.label = label;
      manifest.records.push_back(std::move(r));
      found = true;
    }
    if (!found) {
      throw SamplingExhausted("no " + std::string(label == 1 ? "malignant" : "benign") +
                              " tile found in " + std::to_string(options.max_attempts) +
                              " attempts (record " + std::to_string(i) + ")");
    }
  }
  return manifest;
}

DatasetManifest sample_balanced_tiles(const SlideSet& slides, int n, std::uint64_t seed,
                                      const SamplerOptions& options) {
  return sample_balanced_tiles(slides, tissue_masks(slides), n, seed, options);
}

}  // namespace trires
