#pragma once

#include "sain/tensor.hpp"

namespace sain {

/// Keys cubic convolution kernel with a = -0.5.
double keys_cubic(double x);

/// Separable bicubic resampling with half-pixel centres and clamped edge
/// coordinates. Supported factors: 0.5, 0.25, 2, 4. With `antialias`, a
/// downscale stretches the kernel by 1/factor. Not differentiable.
Tensor bicubic_resize(const Tensor& img, double factor, bool antialias = true);

}  // namespace sain
