#include "sain/dataset.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "sain/image_io.hpp"

namespace sain {

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Dataset Dataset::scan(const std::filesystem::path& dir, std::size_t min_size, std::ostream* warnings) {
  Dataset d;
  for (const auto& path : list_pngs(dir)) {
    Tensor img = read_png(path);
    if (img.shape().h < min_size || img.shape().w < min_size) {
      if (warnings) {
        *warnings << "warning: skipping " << path.string() << " (" << img.shape().h << "x"
                  << img.shape().w << " is smaller than " << min_size << ")\n";
      }
      continue;
    }
    d.files_.push_back(path);
    d.images_.push_back(std::move(img));
  }
  if (d.images_.empty()) throw std::runtime_error("no usable PNG images in " + dir.string());
  return d;
}

Dataset Dataset::from_images(std::vector<Tensor> images) {
  Dataset d;
  d.images_ = std::move(images);
  d.files_.resize(d.images_.size());
  return d;
}

Tensor flip_horizontal(const Tensor& t) {
  const Shape s = t.shape();
  const auto v = t.to_vector();
  std::vector<double> out(v.size());
  for (std::size_t r = 0; r < s.n * s.c * s.h; ++r) {
    for (std::size_t j = 0; j < s.w; ++j) out[r * s.w + j] = v[r * s.w + (s.w - 1 - j)];
  }
  return Tensor::from_vector(s, out, t.dtype());
}

Tensor flip_vertical(const Tensor& t) {
  const Shape s = t.shape();
  const auto v = t.to_vector();
  std::vector<double> out(v.size());
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    for (std::size_t i = 0; i < s.h; ++i) {
      std::copy_n(&v[(p * s.h + (s.h - 1 - i)) * s.w], s.w, &out[(p * s.h + i) * s.w]);
    }
  }
  return Tensor::from_vector(s, out, t.dtype());
}

Tensor load_batch(const Dataset& data, std::size_t crop, std::size_t batch, Rng& rng, DType dtype) {
  if (data.size() == 0) throw std::runtime_error("load_batch: empty dataset");
  const Shape os{batch, 3, crop, crop};
  std::vector<double> out(os.numel());
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor& img = data.image(rng.below(data.size()));
    const Shape s = img.shape();
    if (s.h < crop || s.w < crop) throw std::runtime_error("load_batch: image smaller than crop");
    const std::size_t y0 = rng.below(s.h - crop + 1);
    const std::size_t x0 = rng.below(s.w - crop + 1);
    const bool fh = rng.bernoulli(0.5);
    const bool fv = rng.bernoulli(0.5);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < crop; ++i) {
        const std::size_t si = y0 + (fv ? crop - 1 - i : i);
        for (std::size_t j = 0; j < crop; ++j) {
          const std::size_t sj = x0 + (fh ? crop - 1 - j : j);
          out[os.index(b, c, i, j)] = img.at(0, c, si, sj) / 255.0;
        }
      }
    }
  }
  return Tensor::from_vector(os, out, dtype);
}

}  // namespace sain
