#include "sain/invnet.hpp"

#include <cmath>

#include "sain/autograd.hpp"
#include "sain/codec.hpp"
#include "sain/ops.hpp"

namespace sain {

namespace {

Tensor random_normal(const Shape& shape, double stddev, Rng& rng, DType dtype) {
  std::vector<double> values(shape.numel());
  for (double& v : values) v = stddev * rng.normal();
  return Tensor::from_vector(shape, values, dtype);
}

std::vector<double> per_item_sum(const Tensor& t) {
  const Shape s = t.shape();
  const std::size_t stride = s.c * s.h * s.w;
  std::vector<double> out(s.n, 0.0);
  const auto v = t.to_vector();
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t i = 0; i < stride; ++i) out[n] += v[n * stride + i];
  return out;
}

}  // namespace

DenseBlock::DenseBlock(std::size_t in_channels, std::size_t out_channels, std::size_t growth,
                       Rng& rng, DType dtype)
    : in_channels_(in_channels), out_channels_(out_channels) {
  if (in_channels == 0 || out_channels == 0 || growth == 0) {
    throw std::invalid_argument("DenseBlock: channel counts must be positive");
  }
  for (std::size_t layer = 0; layer < kLayers; ++layer) {
    const bool last = layer + 1 == kLayers;
    const std::size_t ci = in_channels + layer * growth;
    const std::size_t co = last ? out_channels : growth;
    Conv conv;
    const Shape ws{co, ci, 3, 3};
    if (last) {
      conv.weight = Tensor::zeros(ws, dtype);
    } else {
      // Xavier-normal scaled by 0.1.
      const double stddev = 0.1 * std::sqrt(2.0 / static_cast<double>((ci + co) * 9));
      conv.weight = random_normal(ws, stddev, rng, dtype);
    }
    conv.bias = Tensor::zeros({1, co, 1, 1}, dtype);
    conv.weight.set_requires_grad(true);
    conv.bias.set_requires_grad(true);
    layers_.push_back(std::move(conv));
  }
}

Tensor DenseBlock::operator()(const Tensor& x) const {
  std::vector<Tensor> features{x};
  for (std::size_t layer = 0; layer < layers_.size(); ++layer) {
    const Tensor input = features.size() == 1 ? x : concat_channels(features);
    Tensor out = conv2d(input, layers_[layer].weight, layers_[layer].bias, 1);
    if (layer + 1 == layers_.size()) return out;
    features.push_back(leaky_relu(out, kSlope));
  }
  return x;  // unreachable
}

void DenseBlock::collect_parameters(const std::string& prefix, NamedParameters& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string base = prefix + ".conv" + std::to_string(i + 1);
    out.emplace_back(base + ".weight", layers_[i].weight);
    out.emplace_back(base + ".bias", layers_[i].bias);
  }
}

Tensor clamp_scale(const Tensor& s_raw, double alpha) {
  return elementwise_map(
      "clamp_scale", s_raw,
      [alpha](double x) {
        const double sig = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        return alpha * (2.0 * sig - 1.0);
      },
      [alpha](double x, double) {
        const double sig = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        return 2.0 * alpha * sig * (1.0 - sig);
      });
}

namespace {

void check_coupling(const char* kind, const CouplingDims& d, const Tensor& lf, const Tensor& hf) {
  if (lf.shape().c != d.lf || hf.shape().c != d.hf) {
    throw ShapeError(std::string(kind) + ": expected " + std::to_string(d.lf) + " LF and " +
                     std::to_string(d.hf) + " HF channels, got " + lf.shape().str() + " and " +
                     hf.shape().str());
  }
  const Shape a = lf.shape();
  const Shape b = hf.shape();
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw ShapeError(std::string(kind) + ": LF " + a.str() + " and HF " + b.str() +
                     " disagree in batch or spatial size");
  }
}

}  // namespace

VInvBlock::VInvBlock(const CouplingDims& dims, Rng& rng, DType dtype)
    : dims_(dims),
      phi_(dims.hf, dims.lf, dims.growth, rng, dtype),
      rho_(dims.lf, dims.hf, dims.growth, rng, dtype),
      eta_(dims.lf, dims.hf, dims.growth, rng, dtype) {}

void VInvBlock::check(const Tensor& lf, const Tensor& hf) const {
  check_coupling("VInvBlock", dims_, lf, hf);
}

CouplingPair VInvBlock::forward(const Tensor& lf, const Tensor& hf) const {
  check(lf, hf);
  Tensor lf_next = add(lf, phi_(hf));
  Tensor s = clamp_scale(rho_(lf_next), dims_.alpha);
  Tensor hf_next = add(mul(hf, exp(s)), eta_(lf_next));
  return {lf_next, hf_next};
}

CouplingPair VInvBlock::inverse(const Tensor& lf, const Tensor& hf) const {
  check(lf, hf);
  Tensor s = clamp_scale(rho_(lf), dims_.alpha);
  Tensor hf_prev = mul(sub(hf, eta_(lf)), exp(neg(s)));
  Tensor lf_prev = sub(lf, phi_(hf_prev));
  return {lf_prev, hf_prev};
}

std::vector<double> VInvBlock::log_jacobian(const Tensor& lf, const Tensor& hf) const {
  check(lf, hf);
  NoGradGuard guard;
  Tensor lf_next = add(lf, phi_(hf));
  return per_item_sum(clamp_scale(rho_(lf_next), dims_.alpha));
}

void VInvBlock::collect_parameters(const std::string& prefix, NamedParameters& out) const {
  phi_.collect_parameters(prefix + ".phi", out);
  rho_.collect_parameters(prefix + ".rho", out);
  eta_.collect_parameters(prefix + ".eta", out);
}

EInvBlock::EInvBlock(const CouplingDims& dims, Rng& rng, DType dtype)
    : dims_(dims),
      phi_(dims.hf, dims.lf, dims.growth, rng, dtype),
      varphi_(dims.hf, dims.lf, dims.growth, rng, dtype),
      rho_(dims.lf, dims.hf, dims.growth, rng, dtype),
      eta_(dims.lf, dims.hf, dims.growth, rng, dtype) {}

void EInvBlock::check(const Tensor& lf, const Tensor& hf) const {
  check_coupling("EInvBlock", dims_, lf, hf);
}

EnhancedForward EInvBlock::forward(const Tensor& lf, const Tensor& hf) const {
  check(lf, hf);
  Tensor y = add(lf, phi_(hf));
  Tensor lf_next = sub(y, varphi_(hf));
  Tensor s = clamp_scale(rho_(lf_next), dims_.alpha);
  Tensor hf_next = add(mul(hf, exp(s)), eta_(lf_next));
  return {lf_next, hf_next, y};
}

EnhancedInverse EInvBlock::inverse(const Tensor& lf, const Tensor& hf) const {
  check(lf, hf);
  Tensor s = clamp_scale(rho_(lf), dims_.alpha);
  Tensor hf_prev = mul(sub(hf, eta_(lf)), exp(neg(s)));
  Tensor y_restored = add(lf, varphi_(hf_prev));
  Tensor lf_prev = sub(y_restored, phi_(hf_prev));
  return {lf_prev, hf_prev, y_restored};
}

std::vector<double> EInvBlock::log_jacobian(const Tensor& lf, const Tensor& hf) const {
  check(lf, hf);
  NoGradGuard guard;
  Tensor lf_next = sub(add(lf, phi_(hf)), varphi_(hf));
  return per_item_sum(clamp_scale(rho_(lf_next), dims_.alpha));
}

void EInvBlock::collect_parameters(const std::string& prefix, NamedParameters& out) const {
  phi_.collect_parameters(prefix + ".phi", out);
  varphi_.collect_parameters(prefix + ".varphi", out);
  rho_.collect_parameters(prefix + ".rho", out);
  eta_.collect_parameters(prefix + ".eta", out);
}

ModelConfig ModelConfig::standard(int scale) {
  ModelConfig cfg;
  cfg.scale = scale;
  if (scale == 4) {
    cfg.total_blocks = 16;
    cfg.enhanced_blocks = 10;
  }
  cfg.validate();
  return cfg;
}

void ModelConfig::validate() const {
  if (scale != 2 && scale != 4) {
    throw std::invalid_argument("scale must be 2 or 4, got " + std::to_string(scale));
  }
  if (enhanced_blocks == 0 || enhanced_blocks > total_blocks) {
    throw std::invalid_argument("enhanced_blocks must be in [1, total_blocks]");
  }
  if (growth == 0) throw std::invalid_argument("growth must be positive");
  if (!(clamp_alpha > 0)) throw std::invalid_argument("clamp_alpha must be positive");
}

SainModel::SainModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), haar_(HaarStack::for_scale(config.scale)) {
  config_.validate();
  lf_gain_ = 1.0 / static_cast<double>(haar_.factor());
  const CouplingDims dims{lf_channels(), hf_channels(), config.growth, config.clamp_alpha};
  Rng rng(seed);
  for (std::size_t i = 0; i < config.enhanced_blocks; ++i) f_.emplace_back(dims, rng, config.dtype);
  for (std::size_t i = config.enhanced_blocks; i < config.total_blocks; ++i) {
    g_.emplace_back(dims, rng, config.dtype);
  }
}

void SainModel::check_input(const Shape& s) const {
  const std::size_t m = static_cast<std::size_t>(config_.scale) * 8;
  if (s.c != 3) throw ShapeError("model input must have 3 channels, got " + s.str());
  if (s.h % m != 0 || s.w % m != 0 || s.h == 0 || s.w == 0) {
    throw ShapeError("model input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " must have height and width divisible by " + std::to_string(m));
  }
}

Shape SainModel::lr_shape(const Shape& hr) const {
  const std::size_t f = haar_.factor();
  return {hr.n, lf_channels(), hr.h / f, hr.w / f};
}

Shape SainModel::latent_shape(const Shape& hr) const {
  const std::size_t f = haar_.factor();
  return {hr.n, hf_channels(), hr.h / f, hr.w / f};
}

ModelForward SainModel::forward(const Tensor& x, bool quantize) const {
  check_input(x.shape());
  if (x.dtype() != config_.dtype) throw ShapeError("model input dtype does not match parameters");
  auto [lf, hf] = haar_.split(haar_.forward(x));
  lf = scale(lf, lf_gain_);
  Tensor y_pre;
  for (const auto& block : f_) {
    auto out = block.forward(lf, hf);
    lf = out.lf;
    hf = out.hf;
    y_pre = out.y;
  }
  for (const auto& block : g_) {
    auto out = block.forward(lf, hf);
    lf = out.lf;
    hf = out.hf;
  }
  ModelForward result;
  result.y_pre = y_pre;
  result.y_hat_pre = lf;
  result.z_hat = hf;
  result.y = quantize ? ste_quantize_8bit(y_pre) : y_pre;
  result.y_hat = quantize ? ste_quantize_8bit(lf) : lf;
  return result;
}

ModelInverse SainModel::inverse(const Tensor& y, const Tensor& z) const {
  const Shape ys = y.shape();
  const Shape zs = z.shape();
  if (ys.c != lf_channels() || zs.c != hf_channels() || ys.n != zs.n || ys.h != zs.h ||
      ys.w != zs.w) {
    throw ShapeError("model inverse: LR " + ys.str() + " and latent " + zs.str() +
                     " do not match the expected " + std::to_string(lf_channels()) + "+" +
                     std::to_string(hf_channels()) + " channel layout");
  }
  if (y.dtype() != config_.dtype || z.dtype() != config_.dtype) {
    throw ShapeError("model inverse: dtype does not match parameters");
  }
  Tensor lf = y;
  Tensor hf = z;
  for (auto it = g_.rbegin(); it != g_.rend(); ++it) {
    auto out = it->inverse(lf, hf);
    lf = out.lf;
    hf = out.hf;
  }
  Tensor y_r;
  for (auto it = f_.rbegin(); it != f_.rend(); ++it) {
    auto out = it->inverse(lf, hf);
    if (it == f_.rbegin()) y_r = out.y_restored;
    lf = out.lf;
    hf = out.hf;
  }
  Tensor x = haar_.inverse(haar_.merge(scale(lf, 1.0 / lf_gain_), hf));
  return {x, y_r};
}

NamedParameters SainModel::parameters() const {
  NamedParameters params;
  for (std::size_t i = 0; i < f_.size(); ++i) f_[i].collect_parameters("f." + std::to_string(i), params);
  for (std::size_t i = 0; i < g_.size(); ++i) g_[i].collect_parameters("g." + std::to_string(i), params);
  return params;
}

}  // namespace sain
