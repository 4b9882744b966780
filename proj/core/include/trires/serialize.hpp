#pragma once

#include <iosfwd>
#include <string>

#include "trires/tensor.hpp"

namespace trires {

// Header line preceding a tensor payload, e.g. "shape: 16 192 / dtype: f32".
std::string tensor_header(const Tensor& t);

// Writes the header line, a newline, then numel() little-endian elements.
void write_tensor(std::ostream& out, const Tensor& t);

// Inverse of write_tensor. Throws FormatError on a malformed header or a
// short payload.
Tensor read_tensor(std::istream& in);

// Bytes write_tensor emits for `t`.
std::size_t serialized_size(const Tensor& t);

}  // namespace trires
