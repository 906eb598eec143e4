#pragma once

#include <cstddef>
#include <cstdint>

#include "sain/tensor.hpp"

namespace sain {

/// Deterministic natural-looking RGB test image, (1,3,h,w) with 8-bit levels
/// in [0, 255]: smooth colour gradients, soft-edged shapes and fine texture.
Tensor synthetic_image(std::size_t h, std::size_t w, std::uint64_t seed);

}  // namespace sain
