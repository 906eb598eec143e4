#include "sain/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "sain/autograd.hpp"

namespace sain {

namespace {

thread_local bool g_grad_enabled = true;

std::shared_ptr<detail::TensorImpl> make_impl(const Shape& shape, DType dtype) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->dtype = dtype;
  if (dtype == DType::f32) {
    impl->storage = std::make_shared<Storage>(std::vector<float>(shape.numel(), 0.0f));
  } else {
    impl->storage = std::make_shared<Storage>(std::vector<double>(shape.numel(), 0.0));
  }
  return impl;
}

void accumulate_into(Tensor& dst, const Tensor& src) {
  dispatch(dst.dtype(), [&]<class T>() {
    auto d = dst.mutable_data<T>();
    auto s = src.data<T>();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  });
}

}  // namespace

std::string_view to_string(DType dtype) { return dtype == DType::f32 ? "f32" : "f64"; }

DType parse_dtype(std::string_view text) {
  if (text == "f64" || text == "float64" || text == "64") return DType::f64;
  if (text == "f32" || text == "float32" || text == "32") return DType::f32;
  throw std::invalid_argument("unknown precision '" + std::string(text) + "' (expected f64 or f32)");
}

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

Tensor Tensor::zeros(const Shape& shape, DType dtype) { return Tensor(make_impl(shape, dtype)); }

Tensor Tensor::full(const Shape& shape, double value, DType dtype) {
  Tensor t = zeros(shape, dtype);
  dispatch(dtype, [&]<class T>() {
    auto d = t.mutable_data<T>();
    std::fill(d.begin(), d.end(), static_cast<T>(value));
  });
  return t;
}

Tensor Tensor::from_vector(const Shape& shape, std::span<const double> values, DType dtype) {
  if (values.size() != shape.numel()) {
    throw ShapeError("from_vector: " + std::to_string(values.size()) +
                     " values do not fill shape " + shape.str());
  }
  Tensor t = zeros(shape, dtype);
  dispatch(dtype, [&]<class T>() {
    auto d = t.mutable_data<T>();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<T>(values[i]);
  });
  return t;
}

Tensor Tensor::scalar(double value, DType dtype) { return full({1, 1, 1, 1}, value, dtype); }

const Shape& Tensor::shape() const {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  return impl_->shape;
}

DType Tensor::dtype() const {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  return impl_->dtype;
}

Storage& Tensor::storage_checked() const {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  return *impl_->storage;
}

double Tensor::flat(std::size_t i) const {
  return dispatch(dtype(), [&]<class T>() { return static_cast<double>(data<T>()[i]); });
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
  return flat(0);
}

double Tensor::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
  return flat(shape().index(n, c, h, w));
}

std::vector<double> Tensor::to_vector() const {
  return dispatch(dtype(), [&]<class T>() {
    auto d = data<T>();
    return std::vector<double>(d.begin(), d.end());
  });
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  if (impl_->grad_fn) throw std::logic_error("requires_grad can only be set on leaf tensors");
  impl_->requires_grad = flag;
  return *this;
}

bool Tensor::is_leaf() const { return impl_ && !impl_->grad_fn; }

Tensor Tensor::grad() const {
  if (!impl_ || !impl_->grad) return Tensor();
  return Tensor(impl_->grad);
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.reset();
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape();
  impl->dtype = dtype();
  impl->storage = impl_->storage;
  return Tensor(impl);
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape();
  impl->dtype = dtype();
  impl->storage = std::make_shared<Storage>(*impl_->storage);
  return Tensor(impl);
}

Tensor Tensor::to(DType target) const {
  if (target == dtype()) return clone();
  return from_vector(shape(), to_vector(), target);
}

void Tensor::backward() const {
  if (!impl_) throw std::logic_error("backward on undefined tensor");
  if (numel() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape().str());
  }
  const auto& root = impl_->grad_fn;
  if (!root) throw std::logic_error("backward: tensor was not produced by a recorded graph");
  if (root->consumed) throw std::logic_error("backward: graph has already been consumed");

  // Iterative post-order DFS gives a topological order (inputs before users).
  // `order` owns the nodes: clearing a node's inputs may drop the last other reference.
  std::vector<std::shared_ptr<detail::Node>> order;
  std::unordered_map<detail::Node*, bool> visited;
  std::vector<std::pair<std::shared_ptr<detail::Node>, std::size_t>> stack{{root, 0}};
  visited[root.get()] = true;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const auto& fn = node->inputs[next++].impl()->grad_fn;
      if (fn && !visited[fn.get()]) {
        if (fn->consumed) throw std::logic_error("backward: graph has already been consumed");
        visited[fn.get()] = true;
        stack.emplace_back(fn, 0);
      }
    } else {
      order.push_back(std::move(node));
      stack.pop_back();
    }
  }

  std::unordered_map<detail::Node*, Tensor> pending;
  pending[root.get()] = Tensor::full(shape(), 1.0, dtype());

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = it->get();
    auto found = pending.find(node);
    if (found != pending.end()) {
      Tensor g = found->second;
      pending.erase(found);
      std::vector<Tensor> input_grads = node->backward(g);
      if (input_grads.size() != node->inputs.size()) {
        throw std::logic_error("op '" + node->name + "' returned wrong gradient count");
      }
      for (std::size_t i = 0; i < node->inputs.size(); ++i) {
        const Tensor& input = node->inputs[i];
        if (!input.requires_grad() || !input_grads[i].defined()) continue;
        const Tensor& gi = input_grads[i];
        if (gi.shape() != input.shape() || gi.dtype() != input.dtype()) {
          throw std::logic_error("op '" + node->name + "' produced gradient of shape " +
                                 gi.shape().str() + " for input " + input.shape().str());
        }
        if (auto& fn = input.impl()->grad_fn) {
          auto slot = pending.find(fn.get());
          if (slot == pending.end()) {
            pending.emplace(fn.get(), gi);
          } else {
            Tensor acc = slot->second.clone();
            accumulate_into(acc, gi);
            slot->second = acc;
          }
        } else {
          auto& leaf = *input.impl();
          if (!leaf.grad) {
            leaf.grad = gi.clone().impl();
          } else {
            Tensor acc(leaf.grad);
            accumulate_into(acc, gi);
          }
        }
      }
    }
    node->inputs.clear();
    node->backward = nullptr;
    node->consumed = true;
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool needs_graph(std::initializer_list<Tensor> inputs) {
  if (!g_grad_enabled) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

bool needs_graph(const std::vector<Tensor>& inputs) {
  if (!g_grad_enabled) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

Tensor record_op(std::string_view name, Tensor value, std::vector<Tensor> inputs,
                 BackwardFn backward) {
  if (!needs_graph(inputs)) return value;
  if (value.impl()->grad_fn) throw std::logic_error("record_op: value already belongs to a graph");
  auto node = std::make_shared<detail::Node>();
  node->name = std::string(name);
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  value.impl()->grad_fn = std::move(node);
  value.impl()->requires_grad = true;
  return value;
}

}  // namespace sain
