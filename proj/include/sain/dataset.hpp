#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "sain/rng.hpp"
#include "sain/tensor.hpp"

namespace sain {

/// All PNGs of a directory in lexicographic order, decoded once, values in
/// [0, 255]. Files smaller than the crop size are skipped with a warning.
class Dataset {
 public:
  static Dataset scan(const std::filesystem::path& dir, std::size_t min_size, std::ostream* warnings);
  static Dataset from_images(std::vector<Tensor> images);

  std::size_t size() const { return images_.size(); }
  const Tensor& image(std::size_t i) const { return images_.at(i); }
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::vector<std::filesystem::path> files_;
  std::vector<Tensor> images_;
};

/// Lexicographically sorted *.png paths under `dir` (not recursive).
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

Tensor flip_horizontal(const Tensor& t);
Tensor flip_vertical(const Tensor& t);

/// `batch` random crop x crop patches with independent H/V flips (p = 1/2),
/// scaled to [0, 1]. Fully determined by the rng state.
Tensor load_batch(const Dataset& data, std::size_t crop, std::size_t batch, Rng& rng,
                  DType dtype = DType::f64);

}  // namespace sain
