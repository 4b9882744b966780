#include "trires/serialize.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace trires {

namespace {

template <typename T>
void write_le(std::ostream& out, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (T v : values) {
      char bytes[sizeof(T)];
      std::memcpy(bytes, &v, sizeof(T));
      std::reverse(bytes, bytes + sizeof(T));
      out.write(bytes, sizeof(T));
    }
  }
}

template <typename T>
void read_le(std::istream& in, std::span<T> values) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (static_cast<std::size_t>(in.gcount()) != values.size_bytes()) {
    throw FormatError("tensor payload truncated");
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : values) {
      char bytes[sizeof(T)];
      std::memcpy(bytes, &v, sizeof(T));
      std::reverse(bytes, bytes + sizeof(T));
      std::memcpy(&v, bytes, sizeof(T));
    }
  }
}

}  // namespace

std::string tensor_header(const Tensor& t) {
  std::ostringstream os;
  os << "shape:";
  for (auto d : t.shape()) os << ' ' << d;
  os << " / dtype: " << dtype_name(t.dtype());
  return os.str();
}

void write_tensor(std::ostream& out, const Tensor& t) {
  out << tensor_header(t) << '\n';
  dispatch(t.dtype(), [&]<typename T>() { write_le<T>(out, t.data<T>()); });
  if (!out) throw IoError("failed writing tensor payload");
}

Tensor read_tensor(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing tensor header");
  const auto slash = line.find(" / dtype: ");
  if (line.rfind("shape:", 0) != 0 || slash == std::string::npos) {
    throw FormatError("malformed tensor header '" + line + "'");
  }
  Shape shape;
  std::istringstream dims(line.substr(6, slash - 6));
  std::int64_t d;
  while (dims >> d) {
    if (d < 0) throw FormatError("negative extent in tensor header");
    shape.push_back(d);
  }
  if (!dims.eof()) throw FormatError("malformed shape in tensor header '" + line + "'");
  const Dtype dtype = parse_dtype(line.substr(slash + 10));
  Tensor t = Tensor::zeros(std::move(shape), dtype);
  dispatch(dtype, [&]<typename T>() { read_le<T>(in, t.mutable_data<T>()); });
  return t;
}

std::size_t serialized_size(const Tensor& t) {
  return tensor_header(t).size() + 1 + t.numel() * dtype_size(t.dtype());
}

}  // namespace trires
