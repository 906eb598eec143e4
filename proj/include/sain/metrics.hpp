#pragma once

#include <cstddef>

#include "sain/tensor.hpp"

namespace sain {

inline constexpr double kPsnrCap = 100.0;

/// BT.601 luma of each batch item, shape (n,1,h,w).
Tensor luma(const Tensor& rgb);

/// PSNR on the Y channel of [0,255] RGB images after cropping `border` pixels
/// per side. Identical images report kPsnrCap.
double psnr_y(const Tensor& a, const Tensor& b, std::size_t border);

/// Single-scale SSIM on the Y channel: 11x11 Gaussian window (sigma 1.5),
/// averaged over valid window positions and batch items.
double ssim_y(const Tensor& a, const Tensor& b, std::size_t border = 0);

}  // namespace sain
