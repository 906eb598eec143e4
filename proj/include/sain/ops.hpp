#pragma once

// Differentiable tensor operations. Binary ops require identical shapes and
// dtypes; the only broadcasting is by scalar constants or an explicit expand().

#include <cstddef>
#include <vector>

#include "sain/tensor.hpp"

namespace sain {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard product
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor softplus(const Tensor& a);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);

/// Reductions to a (1,1,1,1) scalar.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Broadcasts a (1,1,1,1) tensor to `shape`.
Tensor expand(const Tensor& scalar, const Shape& shape);

/// 2-D convolution with zero padding. weight is (c_out, c_in, k, k) with k odd
/// and padding == (k-1)/2; bias is (1, c_out, 1, 1) or undefined.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t padding);

Tensor slice_channels(const Tensor& a, std::size_t start, std::size_t count);
Tensor concat_channels(const std::vector<Tensor>& parts);
/// Output channel i is input channel index[i]; indices must be distinct.
Tensor gather_channels(const Tensor& a, const std::vector<std::size_t>& index);

/// (n,c,h,w) -> (n, c*b*b, h/b, w/b); output channel c*b*b + i*b + j holds
/// the pixel at offset (i, j) inside each b x b block.
Tensor space_to_depth(const Tensor& a, std::size_t block);
Tensor depth_to_space(const Tensor& a, std::size_t block);

/// Forward value of `hard`, gradient routed to `soft` as if it were the output.
Tensor straight_through(const Tensor& hard, const Tensor& soft);

}  // namespace sain
