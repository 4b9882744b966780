#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace trires {

enum class Split { train, val, test };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct TileRecord {
  std::string slide_id;
  int x = 0;  // level-0 top-left
  int y = 0;
  int side = 224;
  int label = 0;  // 0 benign, 1 malignant
  Split split = Split::train;

  // Level-0 pixel at the tile centre, which decides the label.
  int center_x() const { return x + side / 2; }
  int center_y() const { return y + side / 2; }

  friend bool operator==(const TileRecord&, const TileRecord&) = default;
};

struct DatasetManifest {
  std::vector<TileRecord> records;
  std::uint64_t seed = 0;
  std::string config;  // provenance, single line

  std::vector<TileRecord> records_in(Split split) const;
  std::size_t count(Split split, int label) const;
};

// Header line "# trires-manifest seed=<s> digest=<hex> config=<text>", then
// one "slide_id,x,y,side,label,split" line per record. The digest is
// provenance only; reading does not enforce it, so hand-edited splits load.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);
std::string manifest_digest(const DatasetManifest& manifest);

}  // namespace trires
