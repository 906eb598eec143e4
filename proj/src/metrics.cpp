#include "sain/metrics.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace sain {

namespace {

void check_pair(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  if (a.shape().c != 3) throw ShapeError(std::string(what) + ": expected RGB, got " + a.shape().str());
}

}  // namespace

Tensor luma(const Tensor& rgb) {
  const Shape s = rgb.shape();
  if (s.c != 3) throw ShapeError("luma: expected RGB, got " + s.str());
  const auto v = rgb.to_vector();
  const Shape os{s.n, 1, s.h, s.w};
  std::vector<double> y(os.numel());
  const std::size_t plane = s.plane();
  for (std::size_t n = 0; n < s.n; ++n) {
    const double* r = &v[n * 3 * plane];
    for (std::size_t i = 0; i < plane; ++i) {
      y[n * plane + i] = 0.299 * r[i] + 0.587 * r[plane + i] + 0.114 * r[2 * plane + i];
    }
  }
  return Tensor::from_vector(os, y, DType::f64);
}

double psnr_y(const Tensor& a, const Tensor& b, std::size_t border) {
  check_pair(a, b, "psnr_y");
  const Shape s = a.shape();
  if (s.h <= 2 * border || s.w <= 2 * border) {
    throw ShapeError("psnr_y: image " + s.str() + " too small for border " + std::to_string(border));
  }
  const auto ya = luma(a).to_vector();
  const auto yb = luma(b).to_vector();
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t i = border; i < s.h - border; ++i) {
      for (std::size_t j = border; j < s.w - border; ++j) {
        const std::size_t k = (n * s.h + i) * s.w + j;
        const double d = ya[k] - yb[k];
        sq += d * d;
        ++count;
      }
    }
  }
  const double mse = sq / static_cast<double>(count);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim_y(const Tensor& a, const Tensor& b, std::size_t border) {
  constexpr std::size_t kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double c1 = (0.01 * 255) * (0.01 * 255);
  constexpr double c2 = (0.03 * 255) * (0.03 * 255);
  check_pair(a, b, "ssim_y");
  const Shape s = a.shape();
  if (s.h < 2 * border + kWin || s.w < 2 * border + kWin) {
    throw ShapeError("ssim_y: image " + s.str() + " smaller than the 11x11 window");
  }
  std::array<double, kWin> g{};
  double gsum = 0.0;
  for (std::size_t i = 0; i < kWin; ++i) {
    const double d = static_cast<double>(i) - 5.0;
    gsum += (g[i] = std::exp(-d * d / (2 * kSigma * kSigma)));
  }
  for (double& v : g) v /= gsum;

  const auto ya = luma(a).to_vector();
  const auto yb = luma(b).to_vector();
  const std::size_t h = s.h - 2 * border;
  const std::size_t w = s.w - 2 * border;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < s.n; ++n) {
    auto px = [&](const std::vector<double>& y, std::size_t i, std::size_t j) {
      return y[(n * s.h + i + border) * s.w + j + border];
    };
    for (std::size_t i = 0; i + kWin <= h; ++i) {
      for (std::size_t j = 0; j + kWin <= w; ++j) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t u = 0; u < kWin; ++u) {
          for (std::size_t v = 0; v < kWin; ++v) {
            const double wt = g[u] * g[v];
            const double pa = px(ya, i + u, j + v);
            const double pb = px(yb, i + u, j + v);
            ma += wt * pa;
            mb += wt * pb;
            saa += wt * pa * pa;
            sbb += wt * pb * pb;
            sab += wt * pa * pb;
          }
        }
        const double va = saa - ma * ma;
        const double vb = sbb - mb * mb;
        const double cov = sab - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace sain
