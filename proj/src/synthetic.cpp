#include "sain/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "sain/rng.hpp"

namespace sain {

Tensor synthetic_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  const Shape s{1, 3, h, w};
  std::vector<double> img(s.numel());
  const double H = static_cast<double>(h);
  const double W = static_cast<double>(w);

  // Background: per-channel bilinear gradient.
  for (std::size_t c = 0; c < 3; ++c) {
    const double base = 40 + 150 * rng.uniform();
    const double gy = (rng.uniform() - 0.5) * 120;
    const double gx = (rng.uniform() - 0.5) * 120;
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        img[s.index(0, c, i, j)] = base + gy * (i / H - 0.5) + gx * (j / W - 0.5);
  }

  // Shapes with soft edges: ellipses and axis-aligned boxes.
  const int shapes = 3 + static_cast<int>(rng.below(5));
  for (int k = 0; k < shapes; ++k) {
    const double cy = rng.uniform() * H;
    const double cx = rng.uniform() * W;
    const double ry = (0.08 + 0.3 * rng.uniform()) * H;
    const double rx = (0.08 + 0.3 * rng.uniform()) * W;
    const double edge = 0.5 + 2.0 * rng.uniform();
    const bool box = rng.bernoulli(0.4);
    double colour[3];
    for (double& v : colour) v = 255 * rng.uniform();
    const double alpha = 0.5 + 0.5 * rng.uniform();
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double dy = (i - cy) / ry;
        const double dx = (j - cx) / rx;
        // Signed distance in pixels, approximately.
        const double d = box ? (std::max(std::fabs(dy), std::fabs(dx)) - 1.0) * std::min(rx, ry)
                             : (std::sqrt(dy * dy + dx * dx) - 1.0) * std::min(rx, ry);
        const double cover = alpha / (1.0 + std::exp(d / edge));
        for (std::size_t c = 0; c < 3; ++c) {
          double& p = img[s.index(0, c, i, j)];
          p = (1 - cover) * p + cover * colour[c];
        }
      }
    }
  }

  // Texture: a few oriented sinusoids plus fine noise.
  const int waves = 2 + static_cast<int>(rng.below(3));
  for (int k = 0; k < waves; ++k) {
    const double freq = 0.1 + 0.8 * rng.uniform();
    const double theta = std::numbers::pi * rng.uniform();
    const double phase = 2 * std::numbers::pi * rng.uniform();
    const double amp = 3 + 10 * rng.uniform();
    const double fy = freq * std::sin(theta);
    const double fx = freq * std::cos(theta);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double v = amp * std::sin(fy * i + fx * j + phase);
        for (std::size_t c = 0; c < 3; ++c) img[s.index(0, c, i, j)] += v;
      }
  }
  for (double& p : img) p = std::clamp(std::round(p + 3.0 * rng.normal()), 0.0, 255.0);
  return Tensor::from_vector(s, img);
}

}  // namespace sain
