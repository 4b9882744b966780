#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "trires/baseline.hpp"
#include "trires/triresnet.hpp"

namespace trires {

constexpr int kCheckpointFormatVersion = 1;

struct CheckpointTensorEntry {
  std::string name;
  Shape shape;
  Dtype dtype = Dtype::f32;
  std::uint64_t offset = 0;  // from the first payload byte
  std::uint64_t bytes = 0;   // serialized size including the tensor header line
};

struct CheckpointInfo {
  int format_version = kCheckpointFormatVersion;
  std::string architecture;  // "triresnet" or "single_stream"
  StreamConfig config;
  int num_classes = 2;
  Dtype dtype = Dtype::f32;
  std::vector<std::uint64_t> seeds;
  std::uint64_t head_seed = 0;
  FreezeState freeze;
  std::vector<CheckpointTensorEntry> tensors;
  std::uint64_t payload_offset = 0;  // file offset of the first payload byte
};

// Layout: "TRN1\n", "manifest <bytes>\n", a JSON manifest of <bytes> bytes,
// then each tensor (parameters, running statistics, attached proxy heads)
// in tensor serialization format. Writes go to a temporary sibling that is
// renamed into place, so a failed save leaves any previous file intact.
void save_checkpoint(const TriResNetModel& model, const std::filesystem::path& path);
void save_checkpoint(const SingleStreamModel& model, const std::filesystem::path& path);

// FormatError on a bad magic, unknown version, architecture mismatch,
// missing or misshapen tensor, or truncated payload.
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);
TriResNetModel load_checkpoint(const std::filesystem::path& path);
SingleStreamModel load_single_stream_checkpoint(const std::filesystem::path& path);

using AnyModel = std::variant<TriResNetModel, SingleStreamModel>;
AnyModel load_any_checkpoint(const std::filesystem::path& path);

}  // namespace trires
