#include "sain/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <vector>

namespace sain {

Tensor read_png(const std::filesystem::path& path, DType dtype) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw ImageIoError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw ImageIoError("cannot decode PNG '" + path.string() + "': " + message);
  }
  const Shape shape{1, 3, image.height, image.width};
  std::vector<double> values(shape.numel());
  for (std::size_t y = 0; y < shape.h; ++y)
    for (std::size_t x = 0; x < shape.w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        values[shape.index(0, c, y, x)] = buffer[(y * shape.w + x) * 3 + c];
      }
  return Tensor::from_vector(shape, values, dtype);
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
  const Shape s = image.shape();
  if (s.n != 1 || s.c != 3) {
    throw ImageIoError("write_png expects a (1,3,h,w) image, got " + s.str());
  }
  std::vector<png_byte> buffer(s.numel());
  const auto values = image.to_vector();
  for (std::size_t y = 0; y < s.h; ++y)
    for (std::size_t x = 0; x < s.w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::round(values[s.index(0, c, y, x)]);
        buffer[(y * s.w + x) * 3 + c] = static_cast<png_byte>(v < 0 ? 0 : (v > 255 ? 255 : v));
      }
  png_image out;
  std::memset(&out, 0, sizeof(out));
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(s.w);
  out.height = static_cast<png_uint_32>(s.h);
  out.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw ImageIoError("cannot write PNG '" + path.string() + "': " + out.message);
  }
}

}  // namespace sain
