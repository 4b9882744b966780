#include "trires/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace trires {

std::string_view dtype_name(Dtype dtype) {
  return dtype == Dtype::f32 ? "f32" : "f64";
}

Dtype parse_dtype(std::string_view name) {
  if (name == "f32") return Dtype::f32;
  if (name == "f64") return Dtype::f64;
  throw FormatError("unknown dtype '" + std::string(name) + "'");
}

std::size_t dtype_size(Dtype dtype) {
  return dtype == Dtype::f32 ? sizeof(float) : sizeof(double);
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative extent in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

Storage make_storage(Dtype dtype, std::size_t n) {
  if (dtype == Dtype::f32) return std::vector<float>(n, 0.0f);
  return std::vector<double>(n, 0.0);
}

}  // namespace detail

namespace {

std::shared_ptr<detail::Node> new_leaf(Shape shape, Dtype dtype) {
  auto node = std::make_shared<detail::Node>();
  const auto n = shape_numel(shape);
  node->shape = std::move(shape);
  node->dtype = dtype;
  node->data = detail::make_storage(dtype, n);
  return node;
}

void require(const Tensor& t) {
  if (!t.defined()) throw StateError("operation on an undefined tensor");
}

}  // namespace

Tensor Tensor::zeros(Shape shape, Dtype dtype) {
  return Tensor(new_leaf(std::move(shape), dtype));
}

Tensor Tensor::full(Shape shape, double value, Dtype dtype) {
  Tensor t = zeros(std::move(shape), dtype);
  dispatch(dtype, [&]<typename T>() {
    auto d = t.mutable_data<T>();
    std::fill(d.begin(), d.end(), static_cast<T>(value));
  });
  return t;
}

Tensor Tensor::from_values(Shape shape, std::span<const double> values, Dtype dtype) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_str(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  Tensor t = zeros(std::move(shape), dtype);
  dispatch(dtype, [&]<typename T>() {
    auto d = t.mutable_data<T>();
    std::transform(values.begin(), values.end(), d.begin(),
                   [](double v) { return static_cast<T>(v); });
  });
  return t;
}

Tensor Tensor::scalar(double value, Dtype dtype) { return full({}, value, dtype); }

const Shape& Tensor::shape() const {
  require(*this);
  return node_->shape;
}

std::int64_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("axis out of range for shape " + shape_str(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

Dtype Tensor::dtype() const {
  require(*this);
  return node_->dtype;
}

bool Tensor::requires_grad() const {
  require(*this);
  return node_->requires_grad;
}

Tensor& Tensor::set_requires_grad(bool on) {
  require(*this);
  if (!node_->is_leaf()) throw StateError("requires_grad can only be set on leaf tensors");
  node_->requires_grad = on;
  node_->grad_written = false;
  node_->grad = on ? detail::make_storage(node_->dtype, numel())
                   : detail::make_storage(node_->dtype, 0);
  return *this;
}

bool Tensor::is_leaf() const {
  require(*this);
  return node_->is_leaf();
}

const char* Tensor::op_name() const {
  require(*this);
  return node_->op ? node_->op : "leaf";
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return value(0);
}

double Tensor::value(std::size_t flat_index) const {
  if (flat_index >= numel()) throw ShapeError("flat index out of range");
  return dispatch(dtype(), [&]<typename T>() {
    return static_cast<double>(data<T>()[flat_index]);
  });
}

std::vector<double> Tensor::values() const {
  return dispatch(dtype(), [&]<typename T>() {
    auto d = data<T>();
    return std::vector<double>(d.begin(), d.end());
  });
}

bool Tensor::has_grad() const {
  require(*this);
  return node_->requires_grad && node_->grad_written;
}

Tensor Tensor::grad() const {
  require(*this);
  Tensor g = zeros(node_->shape, node_->dtype);
  if (node_->requires_grad) g.node_->data = node_->grad;
  return g;
}

void Tensor::zero_grad() {
  require(*this);
  if (!node_->requires_grad) return;
  dispatch(node_->dtype, [&]<typename T>() {
    auto& g = detail::as<T>(node_->grad);
    std::fill(g.begin(), g.end(), T(0));
  });
  node_->grad_written = false;
}

Tensor Tensor::clone() const {
  Tensor c = detach();
  if (requires_grad()) c.set_requires_grad(true);
  return c;
}

Tensor Tensor::detach() const {
  require(*this);
  auto node = std::make_shared<detail::Node>();
  node->shape = node_->shape;
  node->dtype = node_->dtype;
  node->data = node_->data;
  return Tensor(std::move(node));
}

namespace {
thread_local bool grad_mode_enabled = true;
bool numeric_checks = false;
}  // namespace

bool GradMode::enabled() { return grad_mode_enabled; }
void GradMode::set_enabled(bool on) { grad_mode_enabled = on; }

NoGradGuard::NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
NoGradGuard::~NoGradGuard() { GradMode::set_enabled(previous_); }

void set_numeric_checks(bool on) { numeric_checks = on; }
bool numeric_checks_enabled() { return numeric_checks; }

}  // namespace trires
