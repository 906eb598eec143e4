#include "sain/ops.hpp"

#include <cmath>
#include <numeric>

#include "sain/autograd.hpp"

namespace sain {

namespace {

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
  if (a.dtype() != b.dtype()) {
    throw ShapeError(std::string(op) + ": dtype mismatch " + std::string(to_string(a.dtype())) +
                     " vs " + std::string(to_string(b.dtype())));
  }
}

// out[i] = f(a[i], b[i]) in the storage type.
template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&]<class T>() {
    auto x = a.data<T>();
    auto y = b.data<T>();
    auto o = out.mutable_data<T>();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i], y[i]);
  });
  return out;
}

double stable_softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  Tensor out = zip(a, b, [](auto x, auto y) { return x + y; });
  return record_op("add", out, {a, b}, [](const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  Tensor out = zip(a, b, [](auto x, auto y) { return x - y; });
  return record_op("sub", out, {a, b},
                   [](const Tensor& g) { return std::vector<Tensor>{g, scale(g, -1.0)}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  Tensor out = zip(a, b, [](auto x, auto y) { return x * y; });
  if (!needs_graph({a, b})) return out;
  Tensor sa = a.detach();
  Tensor sb = b.detach();
  const bool ga = a.requires_grad();
  const bool gb = b.requires_grad();
  return record_op("mul", out, {a, b}, [sa, sb, ga, gb](const Tensor& g) {
    NoGradGuard guard;
    return std::vector<Tensor>{ga ? mul(g, sb) : Tensor(), gb ? mul(g, sa) : Tensor()};
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same("div", a, b);
  Tensor out = zip(a, b, [](auto x, auto y) { return x / y; });
  if (!needs_graph({a, b})) return out;
  Tensor sb = b.detach();
  Tensor so = out.detach();
  const bool ga = a.requires_grad();
  const bool gb = b.requires_grad();
  return record_op("div", out, {a, b}, [sb, so, ga, gb](const Tensor& g) {
    NoGradGuard guard;
    Tensor g_over_b = div(g, sb);
    return std::vector<Tensor>{ga ? g_over_b : Tensor(), gb ? neg(mul(g_over_b, so)) : Tensor()};
  });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double factor) {
  return elementwise_map("scale", a, [factor](double x) { return factor * x; },
                         [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return elementwise_map("add_scalar", a, [offset](double x) { return x + offset; },
                         [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& a) {
  return elementwise_map("exp", a, [](double x) { return std::exp(x); },
                         [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return elementwise_map("log", a, [](double x) { return std::log(x); },
                         [](double x, double) { return 1.0 / x; });
}

Tensor sigmoid(const Tensor& a) {
  return elementwise_map("sigmoid", a, stable_sigmoid,
                         [](double, double y) { return y * (1.0 - y); });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return elementwise_map("leaky_relu", a, [slope](double x) { return x > 0 ? x : slope * x; },
                         [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Tensor softplus(const Tensor& a) {
  return elementwise_map("softplus", a, stable_softplus,
                         [](double x, double) { return stable_sigmoid(x); });
}

Tensor square(const Tensor& a) {
  return elementwise_map("square", a, [](double x) { return x * x; },
                         [](double x, double) { return 2.0 * x; });
}

Tensor abs(const Tensor& a) {
  return elementwise_map("abs", a, [](double x) { return std::fabs(x); },
                         [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor sum(const Tensor& a) {
  const double total = dispatch(a.dtype(), [&]<class T>() {
    auto d = a.data<T>();
    double s = 0.0;
    for (T v : d) s += static_cast<double>(v);
    return s;
  });
  Tensor out = Tensor::scalar(total, a.dtype());
  const Shape shape = a.shape();
  return record_op("sum", out, {a}, [shape](const Tensor& g) {
    return std::vector<Tensor>{Tensor::full(shape, g.item(), g.dtype())};
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor expand(const Tensor& scalar, const Shape& shape) {
  if (scalar.numel() != 1) throw ShapeError("expand: expected a scalar, got " + scalar.shape().str());
  Tensor out = Tensor::full(shape, scalar.item(), scalar.dtype());
  return record_op("expand", out, {scalar}, [](const Tensor& g) {
    NoGradGuard guard;
    return std::vector<Tensor>{sum(g)};
  });
}

Tensor slice_channels(const Tensor& a, std::size_t start, std::size_t count) {
  const Shape s = a.shape();
  if (count == 0 || start + count > s.c) {
    throw ShapeError("slice_channels: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + std::to_string(s.c) +
                     " channels");
  }
  std::vector<std::size_t> index(count);
  std::iota(index.begin(), index.end(), start);
  return gather_channels(a, index);
}

Tensor gather_channels(const Tensor& a, const std::vector<std::size_t>& index) {
  const Shape s = a.shape();
  std::vector<bool> seen(s.c, false);
  for (std::size_t ch : index) {
    if (ch >= s.c) {
      throw ShapeError("gather_channels: channel " + std::to_string(ch) + " outside " +
                       std::to_string(s.c) + " channels");
    }
    if (seen[ch]) throw ShapeError("gather_channels: duplicate channel " + std::to_string(ch));
    seen[ch] = true;
  }
  const Shape os{s.n, index.size(), s.h, s.w};
  const std::size_t plane = s.plane();
  Tensor out = Tensor::zeros(os, a.dtype());
  dispatch(a.dtype(), [&]<class T>() {
    auto src = a.data<T>();
    auto dst = out.mutable_data<T>();
    for (std::size_t n = 0; n < s.n; ++n) {
      for (std::size_t i = 0; i < index.size(); ++i) {
        std::copy_n(src.begin() + s.index(n, index[i], 0, 0), plane,
                    dst.begin() + os.index(n, i, 0, 0));
      }
    }
  });
  return record_op("gather_channels", out, {a}, [s, os, index, plane](const Tensor& g) {
    Tensor ga = Tensor::zeros(s, g.dtype());
    dispatch(g.dtype(), [&]<class T>() {
      auto src = g.data<T>();
      auto dst = ga.mutable_data<T>();
      for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t i = 0; i < index.size(); ++i) {
          std::copy_n(src.begin() + os.index(n, i, 0, 0), plane,
                      dst.begin() + s.index(n, index[i], 0, 0));
        }
      }
    });
    return std::vector<Tensor>{ga};
  });
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape first = parts.front().shape();
  std::size_t channels = 0;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w || p.dtype() != parts.front().dtype()) {
      throw ShapeError("concat_channels: incompatible shapes " + first.str() + " and " + s.str());
    }
    channels += s.c;
  }
  const Shape os{first.n, channels, first.h, first.w};
  const std::size_t plane = os.plane();
  Tensor out = Tensor::zeros(os, parts.front().dtype());
  dispatch(out.dtype(), [&]<class T>() {
    auto dst = out.mutable_data<T>();
    std::size_t offset = 0;
    for (const auto& p : parts) {
      auto src = p.data<T>();
      const std::size_t pc = p.shape().c;
      for (std::size_t n = 0; n < os.n; ++n) {
        std::copy_n(src.begin() + n * pc * plane, pc * plane, dst.begin() + os.index(n, offset, 0, 0));
      }
      offset += pc;
    }
  });
  std::vector<std::size_t> widths;
  for (const auto& p : parts) widths.push_back(p.shape().c);
  return record_op("concat_channels", out, parts, [os, widths](const Tensor& g) {
    std::vector<Tensor> grads;
    std::size_t offset = 0;
    NoGradGuard guard;
    for (std::size_t width : widths) {
      grads.push_back(slice_channels(g, offset, width));
      offset += width;
    }
    return grads;
  });
}

namespace {

template <class T>
void space_to_depth_kernel(std::span<const T> src, const Shape& s, std::span<T> dst, std::size_t b,
                           bool inverse) {
  const Shape os{s.n, s.c * b * b, s.h / b, s.w / b};
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j) {
          const std::size_t oc = c * b * b + i * b + j;
          for (std::size_t y = 0; y < os.h; ++y)
            for (std::size_t x = 0; x < os.w; ++x) {
              const std::size_t big = s.index(n, c, y * b + i, x * b + j);
              const std::size_t small = os.index(n, oc, y, x);
              if (inverse) {
                dst[big] = src[small];
              } else {
                dst[small] = src[big];
              }
            }
        }
}

Tensor rearrange(const Tensor& a, const Shape& big, std::size_t block, bool to_depth) {
  const Shape small{big.n, big.c * block * block, big.h / block, big.w / block};
  Tensor out = Tensor::zeros(to_depth ? small : big, a.dtype());
  dispatch(a.dtype(), [&]<class T>() {
    space_to_depth_kernel<T>(a.data<T>(), big, out.mutable_data<T>(), block, !to_depth);
  });
  return out;
}

}  // namespace

Tensor space_to_depth(const Tensor& a, std::size_t block) {
  const Shape s = a.shape();
  if (block == 0 || s.h % block != 0 || s.w % block != 0) {
    throw ShapeError("space_to_depth: spatial size " + std::to_string(s.h) + "x" +
                     std::to_string(s.w) + " not divisible by block " + std::to_string(block));
  }
  Tensor out = rearrange(a, s, block, true);
  return record_op("space_to_depth", out, {a}, [s, block](const Tensor& g) {
    return std::vector<Tensor>{rearrange(g, s, block, false)};
  });
}

Tensor depth_to_space(const Tensor& a, std::size_t block) {
  const Shape s = a.shape();
  if (block == 0 || s.c % (block * block) != 0) {
    throw ShapeError("depth_to_space: " + std::to_string(s.c) + " channels not divisible by " +
                     std::to_string(block * block));
  }
  const Shape big{s.n, s.c / (block * block), s.h * block, s.w * block};
  Tensor out = rearrange(a, big, block, false);
  return record_op("depth_to_space", out, {a}, [big, block](const Tensor& g) {
    return std::vector<Tensor>{rearrange(g, big, block, true)};
  });
}

Tensor straight_through(const Tensor& hard, const Tensor& soft) {
  require_same("straight_through", hard, soft);
  Tensor out = hard.detach().clone();
  return record_op("straight_through", out, {soft},
                   [](const Tensor& g) { return std::vector<Tensor>{g}; });
}

}  // namespace sain
