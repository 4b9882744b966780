#include "trires/checkpoint.hpp"

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "trires/serialize.hpp"

namespace trires {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "TRN1\n";

json config_json(const StreamConfig& c) {
  return {{"stage_depths", c.stage_depths},
          {"base_width", c.base_width},
          {"in_channels", c.in_channels},
          {"scale", to_string(c.scale)}};
}

StreamConfig config_from_json(const json& j) {
  StreamConfig c;
  c.stage_depths = j.at("stage_depths").get<std::array<int, 4>>();
  c.base_width = j.at("base_width").get<int>();
  c.in_channels = j.at("in_channels").get<int>();
  c.scale = parse_width_scale(j.at("scale").get<std::string>());
  return c;
}

std::vector<NamedTensor> state_of(const TriResNetModel& m) {
  auto out = m.parameters();
  auto b = m.buffers();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<NamedTensor> state_of(const SingleStreamModel& m) {
  auto out = m.parameters();
  auto b = m.buffers();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void write_checkpoint(const json& header_fields, const std::vector<NamedTensor>& state,
                      const std::filesystem::path& path) {
  json manifest = header_fields;
  manifest["format_version"] = kCheckpointFormatVersion;
  json dir = json::array();
  std::uint64_t offset = 0;
  for (const auto& nt : state) {
    const std::uint64_t bytes = serialized_size(nt.tensor);
    dir.push_back({{"name", nt.name},
                   {"shape", nt.tensor.shape()},
                   {"dtype", dtype_name(nt.tensor.dtype())},
                   {"offset", offset},
                   {"bytes", bytes}});
    offset += bytes;
  }
  manifest["tensors"] = std::move(dir);
  const std::string text = manifest.dump();

  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << kMagic << "manifest " << text.size() << '\n' << text;
    for (const auto& nt : state) write_tensor(out, nt.tensor);
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

void restore_state(const CheckpointInfo& info, const std::filesystem::path& path,
                   const std::vector<NamedTensor>& state) {
  std::map<std::string, const CheckpointTensorEntry*> by_name;
  for (const auto& e : info.tensors) by_name[e.name] = &e;
  if (by_name.size() != state.size()) {
    throw FormatError(path.string() + ": tensor directory holds " + std::to_string(by_name.size()) +
                      " entries, model expects " + std::to_string(state.size()));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  for (const auto& nt : state) {
    const auto it = by_name.find(nt.name);
    if (it == by_name.end()) throw FormatError(path.string() + ": missing tensor " + nt.name);
    in.seekg(static_cast<std::streamoff>(info.payload_offset + it->second->offset));
    if (!in) throw FormatError(path.string() + ": truncated before tensor " + nt.name);
    const Tensor t = read_tensor(in);
    if (t.shape() != nt.tensor.shape() || t.dtype() != nt.tensor.dtype()) {
      throw FormatError(path.string() + ": tensor " + nt.name + " is " + tensor_header(t) +
                        ", model expects " + tensor_header(nt.tensor));
    }
    dispatch(t.dtype(), [&]<typename T>() {
      Tensor dst = nt.tensor;
      auto d = dst.mutable_data<T>();
      auto s = t.data<T>();
      std::copy(s.begin(), s.end(), d.begin());
    });
  }
}

void check_architecture(const CheckpointInfo& info, const std::filesystem::path& path,
                        std::string_view expected) {
  if (info.architecture != expected) {
    throw FormatError(path.string() + " holds a '" + info.architecture + "' model, expected '" +
                      std::string(expected) + "'");
  }
}

}  // namespace

void save_checkpoint(const TriResNetModel& model, const std::filesystem::path& path) {
  json h;
  h["architecture"] = "triresnet";
  h["stream_config"] = config_json(model.config);
  h["num_classes"] = model.num_classes;
  h["dtype"] = dtype_name(model.dtype);
  h["seeds"] = model.stream_seeds;
  h["head_seed"] = model.head_seed;
  const auto& f = model.freeze_state();
  h["freeze"] = {{"streams", f.streams}, {"head", f.head}};
  json proxies = json::array();
  for (int i = 0; i < kStreamCount; ++i) {
    if (model.proxy_heads[i]) proxies.push_back(i);
  }
  h["proxy_heads"] = proxies;
  write_checkpoint(h, state_of(model), path);
}

void save_checkpoint(const SingleStreamModel& model, const std::filesystem::path& path) {
  json h;
  h["architecture"] = "single_stream";
  h["stream_config"] = config_json(model.config);
  h["num_classes"] = model.num_classes;
  h["dtype"] = dtype_name(model.dtype);
  h["seeds"] = {model.stream_seed};
  h["head_seed"] = model.head_seed;
  h["freeze"] = {{"streams", {false, false, false}}, {"head", false}};
  h["proxy_heads"] = json::array();
  write_checkpoint(h, state_of(model), path);
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string magic(kMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kMagic) throw FormatError(path.string() + " is not a checkpoint (bad magic)");
  std::string line;
  if (!std::getline(in, line) || line.rfind("manifest ", 0) != 0) {
    throw FormatError(path.string() + ": missing manifest length line");
  }
  std::size_t length = 0;
  try {
    length = std::stoull(line.substr(9));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed manifest length");
  }
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (static_cast<std::size_t>(in.gcount()) != length) {
    throw FormatError(path.string() + ": truncated manifest");
  }
  CheckpointInfo info;
  info.payload_offset = static_cast<std::uint64_t>(in.tellg());
  try {
    const json m = json::parse(text);
    info.format_version = m.at("format_version").get<int>();
    if (info.format_version != kCheckpointFormatVersion) {
      throw FormatError(path.string() + ": unsupported format version " +
                        std::to_string(info.format_version));
    }
    info.architecture = m.at("architecture").get<std::string>();
    info.config = config_from_json(m.at("stream_config"));
    info.num_classes = m.at("num_classes").get<int>();
    info.dtype = parse_dtype(m.at("dtype").get<std::string>());
    info.seeds = m.at("seeds").get<std::vector<std::uint64_t>>();
    info.head_seed = m.at("head_seed").get<std::uint64_t>();
    info.freeze.streams = m.at("freeze").at("streams").get<std::array<bool, kStreamCount>>();
    info.freeze.head = m.at("freeze").at("head").get<bool>();
    for (const auto& e : m.at("tensors")) {
      CheckpointTensorEntry entry;
      entry.name = e.at("name").get<std::string>();
      entry.shape = e.at("shape").get<Shape>();
      entry.dtype = parse_dtype(e.at("dtype").get<std::string>());
      entry.offset = e.at("offset").get<std::uint64_t>();
      entry.bytes = e.at("bytes").get<std::uint64_t>();
      info.tensors.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::uint64_t end = info.payload_offset;
  for (const auto& e : info.tensors) end = std::max(end, info.payload_offset + e.offset + e.bytes);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec || size < end) throw FormatError(path.string() + ": truncated payload");
  return info;
}

TriResNetModel load_checkpoint(const std::filesystem::path& path) {
  const CheckpointInfo info = read_checkpoint_info(path);
  check_architecture(info, path, "triresnet");
  if (info.seeds.size() != kStreamCount) throw FormatError(path.string() + ": expected 3 seeds");
  TriResNetModel m;
  try {
    m = build_triresnet(info.config, info.num_classes, {info.seeds[0], info.seeds[1], info.seeds[2]},
                        info.head_seed, info.dtype);
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  for (int i = 0; i < kStreamCount; ++i) {
    const std::string name = "proxy" + std::to_string(i) + ".weight";
    for (const auto& e : info.tensors) {
      if (e.name == name) m.attach_proxy_head(i, 0);
    }
  }
  restore_state(info, path, state_of(m));
  m.set_freeze_state(info.freeze);
  return m;
}

SingleStreamModel load_single_stream_checkpoint(const std::filesystem::path& path) {
  const CheckpointInfo info = read_checkpoint_info(path);
  check_architecture(info, path, "single_stream");
  if (info.seeds.size() != 1) throw FormatError(path.string() + ": expected 1 seed");
  SingleStreamModel m;
  try {
    m = build_single_stream(info.config, info.num_classes, info.seeds[0], info.head_seed, info.dtype);
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  restore_state(info, path, state_of(m));
  return m;
}

AnyModel load_any_checkpoint(const std::filesystem::path& path) {
  const CheckpointInfo info = read_checkpoint_info(path);
  if (info.architecture == "single_stream") return load_single_stream_checkpoint(path);
  return load_checkpoint(path);
}

}  // namespace trires
