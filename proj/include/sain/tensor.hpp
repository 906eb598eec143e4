#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace sain {

enum class DType { f64, f32 };

std::string_view to_string(DType dtype);
DType parse_dtype(std::string_view text);

/// NCHW extent of a dense 4-D tensor.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  constexpr std::size_t numel() const { return n * c * h * w; }
  constexpr std::size_t index(std::size_t in, std::size_t ic, std::size_t ih,
                              std::size_t iw) const {
    return ((in * c + ic) * h + ih) * w + iw;
  }
  constexpr std::size_t plane() const { return h * w; }

  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const;
};

using Storage = std::variant<std::vector<double>, std::vector<float>>;

/// Thrown for shape, dtype and argument violations on tensor operations.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {
struct Node;
struct TensorImpl {
  Shape shape;
  DType dtype = DType::f64;
  std::shared_ptr<Storage> storage;
  bool requires_grad = false;
  std::shared_ptr<TensorImpl> grad;
  std::shared_ptr<Node> grad_fn;
};
}  // namespace detail

/// Reference-counted handle to a dense NCHW tensor that may take part in a
/// reverse-mode autodiff graph. Copies share data; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(const Shape& shape, DType dtype = DType::f64);
  static Tensor full(const Shape& shape, double value, DType dtype = DType::f64);
  static Tensor from_vector(const Shape& shape, std::span<const double> values,
                            DType dtype = DType::f64);
  static Tensor scalar(double value, DType dtype = DType::f64);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  DType dtype() const;
  std::size_t numel() const { return shape().numel(); }

  double item() const;
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;
  double flat(std::size_t i) const;
  std::vector<double> to_vector() const;

  template <class T>
  std::span<const T> data() const {
    return std::get<std::vector<T>>(storage_checked());
  }
  template <class T>
  std::span<T> mutable_data() {
    return std::get<std::vector<T>>(storage_checked());
  }

  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);
  bool is_leaf() const;
  /// Accumulated gradient, or an undefined tensor if none has been produced.
  Tensor grad() const;
  void zero_grad();

  Tensor detach() const;
  Tensor clone() const;
  Tensor to(DType dtype) const;

  /// Reverse pass from a scalar loss. Gradients are summed into every
  /// reachable leaf with requires_grad; the graph is consumed.
  void backward() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  Storage& storage_checked() const;

  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Trainable tensors with stable, unique names.
using NamedParameters = std::vector<std::pair<std::string, Tensor>>;

/// True unless a NoGradGuard is alive on this thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Calls `f.template operator()<T>()` with T matching `dtype`.
template <class F>
decltype(auto) dispatch(DType dtype, F&& f) {
  if (dtype == DType::f32) return f.template operator()<float>();
  return f.template operator()<double>();
}

}  // namespace sain
