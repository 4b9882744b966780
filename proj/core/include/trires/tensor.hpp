#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trires/errors.hpp"

namespace trires {

enum class Dtype { f32, f64 };

std::string_view dtype_name(Dtype dtype);
Dtype parse_dtype(std::string_view name);
std::size_t dtype_size(Dtype dtype);

// Extents in batch x channel x height x width order for image data. An empty
// shape denotes a scalar.
using Shape = std::vector<std::int64_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Invokes `fn.template operator()<T>()` with T = float or double.
template <typename Fn>
decltype(auto) dispatch(Dtype dtype, Fn&& fn) {
  if (dtype == Dtype::f32) {
    return fn.template operator()<float>();
  }
  return fn.template operator()<double>();
}

namespace detail {

using Storage = std::variant<std::vector<float>, std::vector<double>>;

struct Node;
using BackwardFn = std::function<void(Node&)>;

struct Node {
  Shape shape;
  Dtype dtype = Dtype::f32;
  Storage data;
  bool requires_grad = false;

  // Leaf accumulator; allocated iff requires_grad. `grad_written` tracks
  // whether any backward pass touched it since the last zeroing.
  Storage grad;
  bool grad_written = false;

  // Recorded operation that produced this node. Empty for leaves.
  const char* op = nullptr;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  // Scratch adjoint, only populated during a backward pass.
  Storage adjoint;
  bool has_adjoint = false;

  bool is_leaf() const { return !backward; }
};

template <typename T>
std::vector<T>& as(Storage& s) {
  return std::get<std::vector<T>>(s);
}
template <typename T>
const std::vector<T>& as(const Storage& s) {
  return std::get<std::vector<T>>(s);
}

Storage make_storage(Dtype dtype, std::size_t n);

// Returns the adjoint buffer of `node`, allocating zeros on first use. Empty
// when the node does not require a gradient.
template <typename T>
std::span<T> adjoint(Node& node) {
  if (!node.requires_grad) return {};
  if (!node.has_adjoint) {
    node.adjoint = make_storage(node.dtype, shape_numel(node.shape));
    node.has_adjoint = true;
  }
  return as<T>(node.adjoint);
}

}  // namespace detail

// Shared handle to a dense array participating in the differentiation graph.
// Copies alias the same storage; use clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, Dtype dtype = Dtype::f32);
  static Tensor full(Shape shape, double value, Dtype dtype = Dtype::f32);
  static Tensor from_values(Shape shape, std::span<const double> values,
                            Dtype dtype = Dtype::f32);
  static Tensor scalar(double value, Dtype dtype = Dtype::f32);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::int64_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  Dtype dtype() const;

  bool requires_grad() const;
  // Turning the flag on allocates a zeroed accumulator; off drops it.
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const;
  const char* op_name() const;

  double item() const;
  double value(std::size_t flat_index) const;
  std::vector<double> values() const;

  template <typename T>
  std::span<const T> data() const {
    return detail::as<T>(node_->data);
  }
  // Direct writes are reserved for leaves: initialisers, optimisers and
  // finite-difference probes.
  template <typename T>
  std::span<T> mutable_data() {
    return detail::as<T>(node_->data);
  }

  bool has_grad() const;
  Tensor grad() const;
  template <typename T>
  std::span<T> grad_data() {
    return detail::as<T>(node_->grad);
  }
  void zero_grad();

  Tensor clone() const;
  // Copy of the values as a fresh leaf without gradient tracking.
  Tensor detach() const;

  const void* id() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Thread-local switch that stops operations from recording backward rules.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Debug toggle: when on, every operation rejects non-finite inputs and
// outputs with NumericError. Off by default.
void set_numeric_checks(bool on);
bool numeric_checks_enabled();

}  // namespace trires
