#include "trires/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "trires/tiles.hpp"
#include "trires/training.hpp"

namespace trires {

int heatmap_extent(int extent, int side, int stride) {
  if (side < 1 || stride < 1) throw ConfigError("heatmap side and stride must be positive");
  if (extent < side) return 0;
  return (extent - side) / stride + 1;
}

TileRecord Heatmap::cell_record(int r, int c) const {
  TileRecord rec;
  rec.slide_id = slide_id;
  rec.x = c * stride;
  rec.y = r * stride;
  rec.side = side;
  return rec;
}

Heatmap assemble_heatmap(TilePredictor& predictor, const PyramidalSlide& slide,
                         const TissueMask& tissue, const HeatmapOptions& options) {
  Heatmap h;
  h.slide_id = slide.id();
  h.side = options.side;
  h.stride = options.stride > 0 ? options.stride : options.side;
  if (h.side > slide.width() || h.side > slide.height()) {
    throw ConfigError("heatmap tile side " + std::to_string(h.side) + " exceeds slide '" +
                      slide.id() + "'");
  }
  h.rows = heatmap_extent(slide.height(), h.side, h.stride);
  h.cols = heatmap_extent(slide.width(), h.side, h.stride);
  h.values.assign(static_cast<std::size_t>(h.rows) * h.cols, 0.0);

  std::vector<TileRecord> pending;
  std::vector<std::size_t> cells;
  for (int r = 0; r < h.rows; ++r) {
    for (int c = 0; c < h.cols; ++c) {
      TileRecord rec = h.cell_record(r, c);
      if (!tissue.contains_level0(rec.center_x(), rec.center_y())) continue;
      pending.push_back(std::move(rec));
      cells.push_back(static_cast<std::size_t>(r) * h.cols + c);
    }
  }
  for (const auto& [a, b] : batch_ranges(pending.size(), options.batch_size)) {
    const std::span<const TileRecord> batch(pending.data() + a, b - a);
    Tensor tiles;
    if (predictor.needs_pixels()) {
      std::vector<Tensor> parts;
      for (const auto& rec : batch) {
        Tensor t = extract_tile(slide, rec, options.dtype);
        if (options.input_side > 0 && options.input_side != rec.side) t = resize_tile(t, options.input_side);
        parts.push_back(std::move(t));
      }
      tiles = stack_tiles(parts);
    }
    const auto p = predictor.malignancy(tiles, batch);
    if (p.size() != batch.size()) throw StateError("predictor returned a wrong number of values");
    for (std::size_t i = 0; i < p.size(); ++i) h.values[cells[a + i]] = std::clamp(p[i], 0.0, 1.0);
  }
  return h;
}

Heatmap assemble_heatmap(TilePredictor& predictor, const PyramidalSlide& slide,
                         const HeatmapOptions& options) {
  return assemble_heatmap(predictor, slide, tissue_mask(slide), options);
}

void export_heatmap_image(const Heatmap& heatmap, const std::filesystem::path& path) {
  GrayImage img(heatmap.cols, heatmap.rows);
  for (std::size_t i = 0; i < heatmap.values.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(heatmap.values[i], 0.0, 1.0)));
  }
  write_pgm(path, img);
}

std::vector<double> read_heatmap_image(const std::filesystem::path& path, int* rows, int* cols) {
  const GrayImage img = read_pgm(path);
  if (rows) *rows = img.height;
  if (cols) *cols = img.width;
  std::vector<double> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.pixels[i] / 255.0;
  return out;
}

void write_heatmap_sidecar(const Heatmap& heatmap, const std::filesystem::path& path) {
  nlohmann::json j;
  j["slide_id"] = heatmap.slide_id;
  j["rows"] = heatmap.rows;
  j["cols"] = heatmap.cols;
  j["side"] = heatmap.side;
  j["stride"] = heatmap.stride;
  j["level"] = 0;
  j["cell_origin"] = "x = col * stride, y = row * stride";
  j["encoding"] = "value = round(255 * p)";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write heatmap sidecar to " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace trires
