#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "trires/evaluation.hpp"
#include "trires/tissue.hpp"

namespace trires {

// Cells per axis for a grid of side x side tiles at the given stride:
// floor((extent - side) / stride) + 1, or 0 when the tile does not fit.
int heatmap_extent(int extent, int side, int stride);

// Row-major malignancy probabilities; cell (r, c) covers the level-0 tile
// with top-left (c * stride, r * stride).
struct Heatmap {
  std::string slide_id;
  int rows = 0;
  int cols = 0;
  int side = 0;
  int stride = 0;
  std::vector<double> values;

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  TileRecord cell_record(int r, int c) const;
};

struct HeatmapOptions {
  int side = 224;
  int stride = 0;  // 0: equal to side
  int batch_size = 32;
  int input_side = 0;
  Dtype dtype = Dtype::f32;
};

// Evaluates the predictor on every grid tile whose centre lies in tissue;
// cells outside the tissue mask are 0 and never reach the predictor.
// ConfigError when side or stride is non-positive or side exceeds the slide.
Heatmap assemble_heatmap(TilePredictor& predictor, const PyramidalSlide& slide,
                         const TissueMask& tissue, const HeatmapOptions& options);
Heatmap assemble_heatmap(TilePredictor& predictor, const PyramidalSlide& slide,
                         const HeatmapOptions& options);

// P5 graymap, one pixel per cell with value round(255 p). IoError when the
// path cannot be written.
void export_heatmap_image(const Heatmap& heatmap, const std::filesystem::path& path);
// Probabilities recovered as value / 255.
std::vector<double> read_heatmap_image(const std::filesystem::path& path, int* rows = nullptr,
                                       int* cols = nullptr);
// JSON sidecar: slide id, rows, cols, side, stride and the level-0 mapping.
void write_heatmap_sidecar(const Heatmap& heatmap, const std::filesystem::path& path);

}  // namespace trires
