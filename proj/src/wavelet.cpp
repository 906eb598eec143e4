#include "sain/wavelet.hpp"

#include <string>

#include "sain/autograd.hpp"
#include "sain/ops.hpp"

namespace sain {

namespace {

Tensor haar_analysis(const Tensor& x) {
  const Shape s = x.shape();
  const Shape os{s.n, 4 * s.c, s.h / 2, s.w / 2};
  Tensor out = Tensor::zeros(os, x.dtype());
  dispatch(x.dtype(), [&]<class T>() {
    auto in = x.data<T>();
    auto o = out.mutable_data<T>();
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t y = 0; y < os.h; ++y)
          for (std::size_t xx = 0; xx < os.w; ++xx) {
            const T a = in[s.index(n, c, 2 * y, 2 * xx)];
            const T b = in[s.index(n, c, 2 * y, 2 * xx + 1)];
            const T cc = in[s.index(n, c, 2 * y + 1, 2 * xx)];
            const T d = in[s.index(n, c, 2 * y + 1, 2 * xx + 1)];
            o[os.index(n, 4 * c + 0, y, xx)] = T(0.5) * (a + b + cc + d);
            o[os.index(n, 4 * c + 1, y, xx)] = T(0.5) * (a - b + cc - d);
            o[os.index(n, 4 * c + 2, y, xx)] = T(0.5) * (a + b - cc - d);
            o[os.index(n, 4 * c + 3, y, xx)] = T(0.5) * (a - b - cc + d);
          }
  });
  return out;
}

Tensor haar_synthesis(const Tensor& t) {
  const Shape s = t.shape();
  const Shape os{s.n, s.c / 4, s.h * 2, s.w * 2};
  Tensor out = Tensor::zeros(os, t.dtype());
  dispatch(t.dtype(), [&]<class T>() {
    auto in = t.data<T>();
    auto o = out.mutable_data<T>();
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t c = 0; c < os.c; ++c)
        for (std::size_t y = 0; y < s.h; ++y)
          for (std::size_t x = 0; x < s.w; ++x) {
            const T ll = in[s.index(n, 4 * c + 0, y, x)];
            const T lh = in[s.index(n, 4 * c + 1, y, x)];
            const T hl = in[s.index(n, 4 * c + 2, y, x)];
            const T hh = in[s.index(n, 4 * c + 3, y, x)];
            o[os.index(n, c, 2 * y, 2 * x)] = T(0.5) * (ll + lh + hl + hh);
            o[os.index(n, c, 2 * y, 2 * x + 1)] = T(0.5) * (ll - lh + hl - hh);
            o[os.index(n, c, 2 * y + 1, 2 * x)] = T(0.5) * (ll + lh - hl - hh);
            o[os.index(n, c, 2 * y + 1, 2 * x + 1)] = T(0.5) * (ll - lh - hl + hh);
          }
  });
  return out;
}

}  // namespace

Tensor haar_forward(const Tensor& x) {
  const Shape s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ShapeError("haar_forward: spatial size " + std::to_string(s.h) + "x" +
                     std::to_string(s.w) + " must be even");
  }
  return record_op("haar_forward", haar_analysis(x), {x},
                   [](const Tensor& g) { return std::vector<Tensor>{haar_synthesis(g)}; });
}

Tensor haar_inverse(const Tensor& t) {
  if (t.shape().c % 4 != 0) {
    throw ShapeError("haar_inverse: channel count " + std::to_string(t.shape().c) +
                     " not divisible by 4");
  }
  return record_op("haar_inverse", haar_synthesis(t), {t},
                   [](const Tensor& g) { return std::vector<Tensor>{haar_analysis(g)}; });
}

HaarStack::HaarStack(std::size_t levels, std::size_t in_channels)
    : levels_(levels), in_channels_(in_channels) {
  if (levels == 0) throw std::invalid_argument("HaarStack: levels must be >= 1");
  if (in_channels == 0) throw std::invalid_argument("HaarStack: in_channels must be >= 1");
  // Channels of the previous level, tracked as (is_lf) for the LL path.
  std::vector<bool> prev_lf(in_channels, true);
  for (std::size_t level = 1; level <= levels; ++level) {
    std::vector<ChannelOrigin> next;
    next.reserve(prev_lf.size() * 4);
    for (std::size_t src = 0; src < prev_lf.size(); ++src) {
      for (std::size_t sb = 0; sb < 4; ++sb) {
        next.push_back({level, static_cast<Subband>(sb), src, prev_lf[src] && sb == 0});
      }
    }
    prev_lf.assign(next.size(), false);
    for (std::size_t i = 0; i < next.size(); ++i) prev_lf[i] = next[i].low_frequency;
    layout_ = std::move(next);
  }
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    (layout_[i].low_frequency ? lf_ : hf_).push_back(i);
  }
  merge_order_.resize(layout_.size());
  for (std::size_t i = 0; i < lf_.size(); ++i) merge_order_[lf_[i]] = i;
  for (std::size_t i = 0; i < hf_.size(); ++i) merge_order_[hf_[i]] = lf_.size() + i;
}

HaarStack HaarStack::for_scale(int scale, std::size_t in_channels) {
  if (scale == 2) return HaarStack(1, in_channels);
  if (scale == 4) return HaarStack(2, in_channels);
  throw std::invalid_argument("unsupported scale " + std::to_string(scale) + " (expected 2 or 4)");
}

Tensor HaarStack::forward(const Tensor& x) const {
  if (x.shape().c != in_channels_) {
    throw ShapeError("HaarStack: expected " + std::to_string(in_channels_) + " channels, got " +
                     std::to_string(x.shape().c));
  }
  Tensor t = x;
  for (std::size_t i = 0; i < levels_; ++i) t = haar_forward(t);
  return t;
}

Tensor HaarStack::inverse(const Tensor& t) const {
  if (t.shape().c != out_channels()) {
    throw ShapeError("HaarStack: expected " + std::to_string(out_channels()) + " channels, got " +
                     std::to_string(t.shape().c));
  }
  Tensor x = t;
  for (std::size_t i = 0; i < levels_; ++i) x = haar_inverse(x);
  return x;
}

std::pair<Tensor, Tensor> HaarStack::split(const Tensor& t) const {
  if (t.shape().c != out_channels()) {
    throw ShapeError("split_lf_hf: " + std::to_string(t.shape().c) +
                     " channels inconsistent with a " + std::to_string(levels_) +
                     "-level stack of " + std::to_string(out_channels()));
  }
  return {gather_channels(t, lf_), gather_channels(t, hf_)};
}

Tensor HaarStack::merge(const Tensor& lf, const Tensor& hf) const {
  if (lf.shape().c != lf_.size() || hf.shape().c != hf_.size()) {
    throw ShapeError("merge_lf_hf: got " + std::to_string(lf.shape().c) + "+" +
                     std::to_string(hf.shape().c) + " channels, stack expects " +
                     std::to_string(lf_.size()) + "+" + std::to_string(hf_.size()));
  }
  return gather_channels(concat_channels({lf, hf}), merge_order_);
}

}  // namespace sain
