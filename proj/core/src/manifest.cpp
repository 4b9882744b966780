#include "trires/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trires/errors.hpp"

namespace trires {

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw FormatError("unknown split '" + std::string(name) + "'");
}

std::vector<TileRecord> DatasetManifest::records_in(Split split) const {
  std::vector<TileRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const TileRecord& r) { return r.split == split; });
  return out;
}

std::size_t DatasetManifest::count(Split split, int label) const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const TileRecord& r) {
    return r.split == split && r.label == label;
  }));
}

std::string manifest_digest(const DatasetManifest& manifest) {
  // FNV-1a over the provenance and every record line.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  feed(std::to_string(manifest.seed));
  feed(manifest.config);
  for (const auto& r : manifest.records) {
    feed(r.slide_id + ',' + std::to_string(r.x) + ',' + std::to_string(r.y) + ',' +
         std::to_string(r.side) + ',' + std::to_string(r.label) + ',' + std::string(split_name(r.split)));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "# trires-manifest seed=" << manifest.seed << " digest=" << manifest_digest(manifest)
      << " config=" << manifest.config << '\n';
  for (const auto& r : manifest.records) {
    out << r.slide_id << ',' << r.x << ',' << r.y << ',' << r.side << ',' << r.label << ','
        << split_name(r.split) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest m;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# trires-manifest", 0) != 0) {
    throw FormatError(path.string() + " lacks a manifest header line");
  }
  {
    std::istringstream header(line.substr(17));
    std::string token;
    while (header >> token) {
      if (token.rfind("seed=", 0) == 0) {
        try {
          m.seed = std::stoull(token.substr(5));
        } catch (const std::exception&) {
          throw FormatError(path.string() + ": malformed seed in header");
        }
      } else if (token.rfind("config=", 0) == 0) {
        std::string rest;
        std::getline(header, rest);
        m.config = token.substr(7) + rest;
        break;
      }
    }
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 6) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    }
    TileRecord r;
    try {
      r.slide_id = fields[0];
      r.x = std::stoi(fields[1]);
      r.y = std::stoi(fields[2]);
      r.side = std::stoi(fields[3]);
      r.label = std::stoi(fields[4]);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
    if (r.side < 1 || r.x < 0 || r.y < 0) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": negative position or empty tile");
    }
    if (r.label != 0 && r.label != 1) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    }
    r.split = parse_split(fields[5]);
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace trires
