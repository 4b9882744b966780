#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "trires/tensor.hpp"

namespace trires {

// Topologically ordered record of the operations reachable from a root
// tensor. Every entry's inputs appear before it.
class Tape {
 public:
  static Tape record(const Tensor& root);

  const std::vector<detail::Node*>& entries() const { return entries_; }
  std::size_t operation_count() const;

  // Reverse sweep seeded with d(root)/d(root) = 1. Leaf gradients accumulate
  // into their grad buffers. Returns the number of operations visited.
  std::size_t backward();

 private:
  Tensor root_;
  std::vector<detail::Node*> entries_;
};

// Populates grad on every requires_grad leaf reachable from `loss`.
// Gradients accumulate across calls until zeroed.
void backward(const Tensor& loss);

// Test hook: scales the adjoint entering every recorded operation named `op`
// by 1.5 during backward. An empty name disables the fault.
void set_backward_fault(std::string op);
const std::string& backward_fault();

}  // namespace trires
