#include <Eigen/Core>

#include <algorithm>

#include "sain/autograd.hpp"
#include "sain/ops.hpp"

namespace sain {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// cols row (c*k + ky)*k + kx holds input[c, y+ky-pad, x+kx-pad] for every (y, x).
template <class T>
void im2col(const T* in, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            std::size_t pad, T* cols) {
  const std::size_t plane = h * w;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = cols + ((c * k + ky) * k + kx) * plane;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(pad);
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad);
        // Output columns whose source x + dx lies inside the row.
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w), static_cast<std::ptrdiff_t>(w) - dx);
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y) + dy;
          T* dst = row + y * w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill_n(dst, w, T(0));
            continue;
          }
          const T* src = in + c * plane + static_cast<std::size_t>(iy) * w;
          std::fill_n(dst, x0, T(0));
          std::copy(src + x0 + dx, src + x1 + dx, dst + x0);
          std::fill(dst + x1, dst + w, T(0));
        }
      }
}

template <class T>
void col2im_add(const T* cols, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
                std::size_t pad, T* out) {
  const std::size_t plane = h * w;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = cols + ((c * k + ky) * k + kx) * plane;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(pad);
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad);
        // Output columns whose source x + dx lies inside the row.
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w), static_cast<std::ptrdiff_t>(w) - dx);
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y) + dy;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          T* dst = out + c * plane + static_cast<std::size_t>(iy) * w;
          const T* src = row + y * w;
          for (std::ptrdiff_t x = x0; x < x1; ++x) dst[x + dx] += src[x];
        }
      }
}

struct ConvGeometry {
  Shape in;
  Shape weight;
  std::size_t pad;
  std::size_t k() const { return weight.h; }
  std::size_t patch() const { return weight.c * weight.h * weight.w; }
  std::size_t plane() const { return in.plane(); }
};

// Operands are staged in Eigen-owned matrices so every product sees the same
// memory alignment; Eigen's small-size kernels otherwise change summation
// order with the address and break run-to-run bit equality.
template <class T>
void conv_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const std::size_t co = g.weight.n;
  const std::size_t plane = g.plane();
  const std::size_t patch = g.patch();
  const RowMat<T> wm = Eigen::Map<const RowMat<T>>(weight, co, patch);
  RowMat<T> cols(patch, plane);
  RowMat<T> om(co, plane);
  for (std::size_t n = 0; n < g.in.n; ++n) {
    const T* src = in + n * g.in.c * plane;
    if (g.k() == 1) {
      std::copy_n(src, patch * plane, cols.data());
    } else {
      im2col(src, g.in.c, g.in.h, g.in.w, g.k(), g.pad, cols.data());
    }
    om.noalias() = wm * cols;
    if (bias) {
      for (std::size_t o = 0; o < co; ++o) om.row(o).array() += bias[o];
    }
    std::copy_n(om.data(), co * plane, out + n * co * plane);
  }
}

template <class T>
void conv_backward(const ConvGeometry& g, const T* in, const T* weight, const T* grad_out,
                   T* grad_in, T* grad_weight, T* grad_bias) {
  const std::size_t co = g.weight.n;
  const std::size_t plane = g.plane();
  const std::size_t patch = g.patch();
  const RowMat<T> wt = Eigen::Map<const RowMat<T>>(weight, co, patch).transpose();
  RowMat<T> cols(patch, plane);
  RowMat<T> gm(co, plane);
  RowMat<T> gw;
  if (grad_weight) gw = Eigen::Map<const RowMat<T>>(grad_weight, co, patch);
  RowMat<T> grad_cols(patch, plane);
  for (std::size_t n = 0; n < g.in.n; ++n) {
    const T* src = in + n * g.in.c * plane;
    std::copy_n(grad_out + n * co * plane, co * plane, gm.data());
    if (grad_weight) {
      if (g.k() == 1) {
        std::copy_n(src, patch * plane, cols.data());
      } else {
        im2col(src, g.in.c, g.in.h, g.in.w, g.k(), g.pad, cols.data());
      }
      gw.noalias() += gm * cols.transpose();
    }
    if (grad_bias) {
      for (std::size_t o = 0; o < co; ++o) {
        const T* row = gm.data() + o * plane;
        T acc = 0;
        for (std::size_t i = 0; i < plane; ++i) acc += row[i];
        grad_bias[o] += acc;
      }
    }
    if (grad_in) {
      T* dst = grad_in + n * g.in.c * plane;
      grad_cols.noalias() = wt * gm;
      if (g.k() == 1) {
        for (std::size_t i = 0; i < patch * plane; ++i) dst[i] += grad_cols.data()[i];
      } else {
        col2im_add(grad_cols.data(), g.in.c, g.in.h, g.in.w, g.k(), g.pad, dst);
      }
    }
  }
  if (grad_weight) std::copy_n(gw.data(), co * patch, grad_weight);
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t padding) {
  const Shape in = input.shape();
  const Shape ws = weight.shape();
  if (ws.h != ws.w || ws.h % 2 == 0) {
    throw ShapeError("conv2d: kernel must be square with odd size, got " + ws.str());
  }
  if (padding != (ws.h - 1) / 2) {
    throw ShapeError("conv2d: padding must be (k-1)/2 = " + std::to_string((ws.h - 1) / 2));
  }
  if (ws.c != in.c) {
    throw ShapeError("conv2d: input has " + std::to_string(in.c) + " channels but weight " +
                     ws.str() + " expects " + std::to_string(ws.c));
  }
  if (weight.dtype() != input.dtype()) throw ShapeError("conv2d: dtype mismatch");
  if (bias.defined() && (bias.shape() != Shape{1, ws.n, 1, 1} || bias.dtype() != input.dtype())) {
    throw ShapeError("conv2d: bias must have shape (1," + std::to_string(ws.n) + ",1,1), got " +
                     bias.shape().str());
  }

  const ConvGeometry geom{in, ws, padding};
  Tensor out = Tensor::zeros({in.n, ws.n, in.h, in.w}, input.dtype());
  dispatch(input.dtype(), [&]<class T>() {
    conv_forward<T>(geom, input.data<T>().data(), weight.data<T>().data(),
                    bias.defined() ? bias.data<T>().data() : nullptr, out.mutable_data<T>().data());
  });

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  if (!needs_graph(inputs)) return out;

  Tensor saved_in = input.detach();
  Tensor saved_w = weight.detach();
  const bool need_in = input.requires_grad();
  const bool need_w = weight.requires_grad();
  const bool has_bias = bias.defined();
  const bool need_b = has_bias && bias.requires_grad();
  return record_op("conv2d", out, inputs,
                   [geom, saved_in, saved_w, need_in, need_w, has_bias, need_b](const Tensor& g) {
                     Tensor gi = need_in ? Tensor::zeros(geom.in, g.dtype()) : Tensor();
                     Tensor gw = need_w ? Tensor::zeros(geom.weight, g.dtype()) : Tensor();
                     Tensor gb = need_b ? Tensor::zeros({1, geom.weight.n, 1, 1}, g.dtype()) : Tensor();
                     dispatch(g.dtype(), [&]<class T>() {
                       conv_backward<T>(geom, saved_in.data<T>().data(), saved_w.data<T>().data(),
                                        g.data<T>().data(),
                                        need_in ? gi.mutable_data<T>().data() : nullptr,
                                        need_w ? gw.mutable_data<T>().data() : nullptr,
                                        need_b ? gb.mutable_data<T>().data() : nullptr);
                     });
                     std::vector<Tensor> grads{gi, gw};
                     if (has_bias) grads.push_back(gb);
                     return grads;
                   });
}

}  // namespace sain
