#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trires/image.hpp"

namespace trires {

struct SlideLevel {
  int downsample = 1;  // relative to level 0
  int width = 0;
  int height = 0;
};

// Binary annotation (1 = malignant) aligned to a pyramid level.
struct MalignancyMask {
  int level = 0;
  GrayImage mask;
};

// Multi-resolution RGB slide. Level 0 is the highest magnification. Levels
// are either held in memory or read on demand from a slide directory, in
// which case a region read touches only the rows it needs.
class PyramidalSlide {
 public:
  static PyramidalSlide in_memory(std::string id, std::vector<RgbImage> levels,
                                  std::vector<int> downsamples,
                                  std::optional<MalignancyMask> mask = std::nullopt);

  const std::string& id() const { return id_; }
  int level_count() const { return static_cast<int>(levels_.size()); }
  // FormatError for a level that does not exist.
  const SlideLevel& level(int index) const;
  int width() const { return level(0).width; }
  int height() const { return level(0).height; }

  RgbImage read_region(int level, int x, int y, int w, int h) const;
  RgbImage read_level(int level) const;

  bool has_malignancy_mask() const { return mask_.has_value(); }
  const MalignancyMask& malignancy_mask() const;

  // Source directory for file-backed slides, empty otherwise.
  const std::filesystem::path& directory() const { return dir_; }

 private:
  friend PyramidalSlide load_slide(const std::filesystem::path& dir);

  struct LevelSource {
    SlideLevel info;
    std::optional<RgbImage> image;  // in-memory levels
    std::filesystem::path file;     // file-backed levels
    std::streamoff data_offset = 0;
  };

  void check_levels() const;

  std::string id_;
  std::vector<LevelSource> levels_;
  std::optional<MalignancyMask> mask_;
  std::filesystem::path dir_;
};

// Slide directory: meta.json, level_<i>.ppm per level and an optional
// malignancy_mask_level0.pgm (0 / 255). FormatError on any inconsistency.
PyramidalSlide load_slide(const std::filesystem::path& dir);
void save_slide(const PyramidalSlide& slide, const std::filesystem::path& dir);

using SlideSet = std::map<std::string, PyramidalSlide>;

// Loads every subdirectory of `root` that holds a meta.json, keyed by slide
// id. A directory that is itself a slide yields a single entry.
SlideSet load_slides(const std::filesystem::path& root);

}  // namespace trires
