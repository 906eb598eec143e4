#include "sain/resize.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sain {

double keys_cubic(double x) {
  constexpr double a = -0.5;
  const double t = std::fabs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::vector<std::size_t> first;  // per output: offset into index/weight
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

Taps build_taps(std::size_t in, std::size_t out, double factor, bool antialias) {
  const double stretch = (antialias && factor < 1.0) ? 1.0 / factor : 1.0;
  const double support = 2.0 * stretch;
  Taps taps;
  for (std::size_t o = 0; o < out; ++o) {
    taps.first.push_back(taps.index.size());
    const double centre = (static_cast<double>(o) + 0.5) / factor - 0.5;
    const auto lo = static_cast<long>(std::floor(centre - support));
    const auto hi = static_cast<long>(std::ceil(centre + support));
    const std::size_t start = taps.weight.size();
    double total = 0.0;
    for (long j = lo; j <= hi; ++j) {
      const double w = keys_cubic((static_cast<double>(j) - centre) / stretch);
      if (w == 0.0) continue;
      const long clamped = std::clamp<long>(j, 0, static_cast<long>(in) - 1);
      taps.index.push_back(static_cast<std::size_t>(clamped));
      taps.weight.push_back(w);
      total += w;
    }
    for (std::size_t k = start; k < taps.weight.size(); ++k) taps.weight[k] /= total;
  }
  taps.first.push_back(taps.index.size());
  return taps;
}

}  // namespace

Tensor bicubic_resize(const Tensor& img, double factor, bool antialias) {
  if (factor != 0.5 && factor != 0.25 && factor != 2.0 && factor != 4.0) {
    throw std::invalid_argument("bicubic_resize: unsupported factor " + std::to_string(factor));
  }
  const Shape s = img.shape();
  const auto out_h = static_cast<std::size_t>(std::lround(static_cast<double>(s.h) * factor));
  const auto out_w = static_cast<std::size_t>(std::lround(static_cast<double>(s.w) * factor));
  if (out_h == 0 || out_w == 0 ||
      std::fabs(static_cast<double>(out_h) - static_cast<double>(s.h) * factor) > 0) {
    throw ShapeError("bicubic_resize: size " + s.str() + " is not divisible by the factor");
  }
  const Taps th = build_taps(s.h, out_h, factor, antialias);
  const Taps tw = build_taps(s.w, out_w, factor, antialias);
  const std::vector<double> src = img.to_vector();

  // Rows first, then columns.
  std::vector<double> mid(s.n * s.c * s.h * out_w, 0.0);
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    for (std::size_t i = 0; i < s.h; ++i) {
      const double* row = &src[(p * s.h + i) * s.w];
      double* dst = &mid[(p * s.h + i) * out_w];
      for (std::size_t o = 0; o < out_w; ++o) {
        double acc = 0.0;
        for (std::size_t k = tw.first[o]; k < tw.first[o + 1]; ++k) acc += tw.weight[k] * row[tw.index[k]];
        dst[o] = acc;
      }
    }
  }
  const Shape os{s.n, s.c, out_h, out_w};
  std::vector<double> out(os.numel(), 0.0);
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    for (std::size_t o = 0; o < out_h; ++o) {
      double* dst = &out[(p * out_h + o) * out_w];
      for (std::size_t k = th.first[o]; k < th.first[o + 1]; ++k) {
        const double* row = &mid[(p * s.h + th.index[k]) * out_w];
        const double w = th.weight[k];
        for (std::size_t x = 0; x < out_w; ++x) dst[x] += w * row[x];
      }
    }
  }
  return Tensor::from_vector(os, out, img.dtype());
}

}  // namespace sain
