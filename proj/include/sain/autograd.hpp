#pragma once

// Hooks for defining differentiable operations outside the core op set.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sain/tensor.hpp"

namespace sain {

/// Maps the upstream gradient of an op's output to one gradient per input.
/// Entries for inputs that do not require grad may be left undefined.
using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_output)>;

namespace detail {
struct Node {
  std::string name;
  std::vector<Tensor> inputs;
  BackwardFn backward;
  bool consumed = false;
};
}  // namespace detail

/// True when an op on `inputs` must be recorded.
bool needs_graph(std::initializer_list<Tensor> inputs);
bool needs_graph(const std::vector<Tensor>& inputs);

/// Attaches `value` to the graph as the output of op `name` over `inputs`.
/// `value` must be freshly computed and not yet part of any graph.
Tensor record_op(std::string_view name, Tensor value, std::vector<Tensor> inputs,
                 BackwardFn backward);

/// Elementwise op y = fwd(x) with dy/dx = deriv(x, y), both evaluated in
/// double precision and stored at the input's precision.
template <class Fwd, class Deriv>
Tensor elementwise_map(std::string_view name, const Tensor& a, Fwd fwd, Deriv deriv) {
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&]<class T>() {
    auto x = a.data<T>();
    auto y = out.mutable_data<T>();
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<T>(fwd(static_cast<double>(x[i])));
  });
  if (!needs_graph({a})) return out;
  Tensor saved_in = a.detach();
  Tensor saved_out = out.detach();
  return record_op(name, out, {a}, [saved_in, saved_out, deriv](const Tensor& g) {
    Tensor ga = Tensor::zeros(saved_in.shape(), saved_in.dtype());
    dispatch(saved_in.dtype(), [&]<class T>() {
      auto x = saved_in.data<T>();
      auto y = saved_out.data<T>();
      auto gd = g.data<T>();
      auto out_g = ga.mutable_data<T>();
      for (std::size_t i = 0; i < x.size(); ++i) {
        out_g[i] = static_cast<T>(static_cast<double>(gd[i]) *
                                  deriv(static_cast<double>(x[i]), static_cast<double>(y[i])));
      }
    });
    return std::vector<Tensor>{ga};
  });
}

}  // namespace sain
