#include "trires/slide.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>

namespace trires {

using nlohmann::json;

namespace {

constexpr const char* kMetaFile = "meta.json";
constexpr const char* kMaskFile = "malignancy_mask_level0.pgm";

std::string level_file(int i) { return "level_" + std::to_string(i) + ".ppm"; }

GrayImage to_binary(const GrayImage& on_disk) {
  GrayImage out = on_disk;
  for (auto& v : out.pixels) v = v > 127 ? 1 : 0;
  return out;
}

GrayImage to_disk(const GrayImage& binary) {
  GrayImage out = binary;
  for (auto& v : out.pixels) v = v ? 255 : 0;
  return out;
}

}  // namespace

PyramidalSlide PyramidalSlide::in_memory(std::string id, std::vector<RgbImage> levels,
                                         std::vector<int> downsamples,
                                         std::optional<MalignancyMask> mask) {
  if (levels.size() != downsamples.size()) {
    throw FormatError("slide '" + id + "': level and downsample counts differ");
  }
  PyramidalSlide s;
  s.id_ = std::move(id);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    LevelSource src;
    src.info = {downsamples[i], levels[i].width, levels[i].height};
    src.image = std::move(levels[i]);
    s.levels_.push_back(std::move(src));
  }
  s.mask_ = std::move(mask);
  s.check_levels();
  return s;
}

void PyramidalSlide::check_levels() const {
  if (levels_.empty()) throw FormatError("slide '" + id_ + "' has no levels");
  const auto& base = levels_[0].info;
  if (base.downsample != 1) throw FormatError("slide '" + id_ + "': level 0 must have downsample 1");
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    const auto& l = levels_[i].info;
    if (l.downsample <= levels_[i - 1].info.downsample) {
      throw FormatError("slide '" + id_ + "': downsample factors must strictly increase");
    }
    const int ew = base.width / l.downsample, eh = base.height / l.downsample;
    if (std::abs(l.width - ew) > 1 || std::abs(l.height - eh) > 1) {
      throw FormatError("slide '" + id_ + "': level " + std::to_string(i) +
                        " extents disagree with its downsample factor");
    }
  }
  if (mask_) {
    const auto& ml = level(mask_->level).width;
    if (mask_->mask.width != ml || mask_->mask.height != level(mask_->level).height) {
      throw FormatError("slide '" + id_ + "': malignancy mask extents differ from its level");
    }
  }
}

const SlideLevel& PyramidalSlide::level(int index) const {
  if (index < 0 || index >= level_count()) {
    throw FormatError("slide '" + id_ + "' has no level " + std::to_string(index));
  }
  return levels_[index].info;
}

RgbImage PyramidalSlide::read_region(int lvl, int x, int y, int w, int h) const {
  const auto& info = level(lvl);
  if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > info.width || y + h > info.height) {
    throw BoundsError("region (" + std::to_string(x) + ", " + std::to_string(y) + ", " +
                      std::to_string(w) + "x" + std::to_string(h) + ") outside level " +
                      std::to_string(lvl) + " of slide '" + id_ + "'");
  }
  const auto& src = levels_[lvl];
  if (src.image) return crop(*src.image, x, y, w, h);
  NetpbmHeader header{'6', info.width, info.height, src.data_offset};
  return read_ppm_region(src.file, header, x, y, w, h);
}

RgbImage PyramidalSlide::read_level(int lvl) const {
  const auto& info = level(lvl);
  const auto& src = levels_[lvl];
  if (src.image) return *src.image;
  (void)info;
  return read_ppm(src.file);
}

const MalignancyMask& PyramidalSlide::malignancy_mask() const {
  if (!mask_) throw StateError("slide '" + id_ + "' has no malignancy mask");
  return *mask_;
}

PyramidalSlide load_slide(const std::filesystem::path& dir) {
  const auto meta_path = dir / kMetaFile;
  std::ifstream in(meta_path);
  if (!in) throw FormatError("missing " + meta_path.string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw FormatError("malformed " + meta_path.string() + ": " + e.what());
  }

  PyramidalSlide s;
  s.dir_ = dir;
  try {
    s.id_ = meta.at("slide_id").get<std::string>();
    const auto& levels = meta.at("levels");
    if (!levels.is_array() || levels.empty()) throw FormatError("meta.json lists no levels");
    if (meta.contains("level_count") && meta.at("level_count").get<std::size_t>() != levels.size()) {
      throw FormatError("meta.json level_count disagrees with its level list");
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const auto& l = levels[i];
      PyramidalSlide::LevelSource src;
      src.info.downsample = l.at("downsample").get<int>();
      src.info.width = l.at("width").get<int>();
      src.info.height = l.at("height").get<int>();
      src.file = dir / l.value("file", level_file(static_cast<int>(i)));
      if (!std::filesystem::exists(src.file)) {
        throw FormatError("slide '" + s.id_ + "': missing level file " + src.file.string());
      }
      const auto header = read_netpbm_header(src.file);
      if (header.kind != '6' || header.width != src.info.width || header.height != src.info.height) {
        throw FormatError("slide '" + s.id_ + "': " + src.file.string() + " does not match meta.json");
      }
      src.data_offset = header.data_offset;
      s.levels_.push_back(std::move(src));
    }
    if (meta.contains("malignancy_mask") && !meta.at("malignancy_mask").is_null()) {
      const auto& m = meta.at("malignancy_mask");
      MalignancyMask mask;
      mask.level = m.value("level", 0);
      mask.mask = to_binary(read_pgm(dir / m.value("file", std::string(kMaskFile))));
      s.mask_ = std::move(mask);
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed " + meta_path.string() + ": " + e.what());
  }
  s.check_levels();
  return s;
}

void save_slide(const PyramidalSlide& slide, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create slide directory " + dir.string() + ": " + ec.message());
  json meta;
  meta["format"] = "trires-slide";
  meta["version"] = 1;
  meta["slide_id"] = slide.id();
  meta["level_count"] = slide.level_count();
  json levels = json::array();
  for (int i = 0; i < slide.level_count(); ++i) {
    const auto& l = slide.level(i);
    levels.push_back({{"index", i}, {"downsample", l.downsample}, {"width", l.width},
                      {"height", l.height}, {"file", level_file(i)}});
    write_ppm(dir / level_file(i), slide.read_level(i));
  }
  meta["levels"] = levels;
  if (slide.has_malignancy_mask()) {
    meta["malignancy_mask"] = {{"file", kMaskFile}, {"level", slide.malignancy_mask().level}};
    write_pgm(dir / kMaskFile, to_disk(slide.malignancy_mask().mask));
  } else {
    meta["malignancy_mask"] = nullptr;
  }
  std::ofstream out(dir / kMetaFile);
  if (!out) throw IoError("cannot write " + (dir / kMetaFile).string());
  out << meta.dump(2) << '\n';
}

SlideSet load_slides(const std::filesystem::path& root) {
  SlideSet set;
  if (std::filesystem::exists(root / kMetaFile)) {
    auto s = load_slide(root);
    set.emplace(s.id(), std::move(s));
    return set;
  }
  if (!std::filesystem::is_directory(root)) throw FormatError(root.string() + " is not a directory");
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / kMetaFile)) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto s = load_slide(d);
    const std::string id = s.id();
    if (!set.emplace(id, std::move(s)).second) throw FormatError("duplicate slide id '" + id + "'");
  }
  if (set.empty()) throw FormatError("no slide directories under " + root.string());
  return set;
}

}  // namespace trires
