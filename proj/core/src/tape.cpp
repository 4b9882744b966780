#include "trires/tape.hpp"

#include <algorithm>
#include <unordered_set>

namespace trires {

namespace {
std::string fault_op;
}

void set_backward_fault(std::string op) { fault_op = std::move(op); }
const std::string& backward_fault() { return fault_op; }

Tape Tape::record(const Tensor& root) {
  if (!root.defined()) throw StateError("cannot record a tape from an undefined tensor");
  Tape tape;
  tape.root_ = root;

  // Iterative post-order DFS over nodes that carry gradient.
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  auto* start = root.node().get();
  if (!start->requires_grad) return tape;
  stack.emplace_back(start, 0);
  visited.insert(start);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      auto* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    tape.entries_.push_back(node);
    stack.pop_back();
  }
  return tape;
}

std::size_t Tape::operation_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(), [](const detail::Node* n) { return !n->is_leaf(); }));
}

std::size_t Tape::backward() {
  if (entries_.empty()) return 0;
  auto& root = *root_.node();
  dispatch(root.dtype, [&]<typename T>() {
    auto seed = detail::adjoint<T>(root);
    std::fill(seed.begin(), seed.end(), T(1));
  });

  std::size_t visited = 0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    detail::Node& node = **it;
    if (node.is_leaf() || !node.has_adjoint) continue;
    if (!fault_op.empty() && fault_op == node.op) {
      dispatch(node.dtype, [&]<typename T>() {
        for (auto& g : detail::as<T>(node.adjoint)) g *= T(1.5);
      });
    }
    node.backward(node);
    ++visited;
  }

  for (auto* node : entries_) {
    if (node->is_leaf() && node->has_adjoint) {
      dispatch(node->dtype, [&]<typename T>() {
        auto& g = detail::as<T>(node->grad);
        const auto& a = detail::as<T>(node->adjoint);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += a[i];
      });
      node->grad_written = true;
    }
    node->adjoint = detail::Storage{};
    node->has_adjoint = false;
  }
  return visited;
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw StateError("backward on an undefined tensor");
  if (loss.numel() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  Tape::record(loss).backward();
}

}  // namespace trires
