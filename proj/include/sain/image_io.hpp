#pragma once

#include <filesystem>
#include <stdexcept>

#include "sain/tensor.hpp"

namespace sain {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decodes any PNG to a (1,3,h,w) tensor of 8-bit RGB values in [0, 255].
Tensor read_png(const std::filesystem::path& path, DType dtype = DType::f64);

/// Writes a (1,3,h,w) tensor as 8-bit RGB PNG, rounding and clamping to [0, 255].
void write_png(const std::filesystem::path& path, const Tensor& image);

}  // namespace sain
