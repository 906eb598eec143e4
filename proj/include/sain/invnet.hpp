#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sain/rng.hpp"
#include "sain/tensor.hpp"
#include "sain/wavelet.hpp"

namespace sain {

/// Five 3x3 convolutions with dense skip connections and leaky-ReLU(0.2)
/// between them. The final layer starts at zero, so a fresh block maps
/// everything to zero.
class DenseBlock {
 public:
  static constexpr std::size_t kLayers = 5;
  static constexpr double kSlope = 0.2;

  DenseBlock(std::size_t in_channels, std::size_t out_channels, std::size_t growth, Rng& rng,
             DType dtype);

  Tensor operator()(const Tensor& x) const;

  std::size_t in_channels() const { return in_channels_; }
  std::size_t out_channels() const { return out_channels_; }
  void collect_parameters(const std::string& prefix, NamedParameters& out) const;

 private:
  struct Conv {
    Tensor weight;
    Tensor bias;
  };
  std::size_t in_channels_;
  std::size_t out_channels_;
  std::vector<Conv> layers_;
};

/// alpha * (2 * sigmoid(s) - 1); keeps exp() of the result inside (e^-alpha, e^alpha).
Tensor clamp_scale(const Tensor& s_raw, double alpha);

/// Block-level channel configuration shared by both coupling kinds.
struct CouplingDims {
  std::size_t lf;
  std::size_t hf;
  std::size_t growth;
  double alpha = 1.0;
};

struct CouplingPair {
  Tensor lf;
  Tensor hf;
};

/// Vanilla coupling: lf' = lf + phi(hf); hf' = hf * exp(clamp(rho(lf'))) + eta(lf').
class VInvBlock {
 public:
  VInvBlock(const CouplingDims& dims, Rng& rng, DType dtype);

  CouplingPair forward(const Tensor& lf, const Tensor& hf) const;
  CouplingPair inverse(const Tensor& lf, const Tensor& hf) const;
  /// log|det J| per batch item at the given forward inputs.
  std::vector<double> log_jacobian(const Tensor& lf, const Tensor& hf) const;

  const CouplingDims& dims() const { return dims_; }
  void collect_parameters(const std::string& prefix, NamedParameters& out) const;

 private:
  void check(const Tensor& lf, const Tensor& hf) const;

  CouplingDims dims_;
  DenseBlock phi_;
  DenseBlock rho_;
  DenseBlock eta_;
};

struct EnhancedForward {
  Tensor lf;
  Tensor hf;
  Tensor y;  // intermediate y_i = lf + phi(hf)
};

struct EnhancedInverse {
  Tensor lf;
  Tensor hf;
  Tensor y_restored;  // lf' + varphi(hf), equal to the forward y_i on exact inputs
};

/// Enhanced coupling: y = lf + phi(hf); lf' = y - varphi(hf);
/// hf' = hf * exp(clamp(rho(lf'))) + eta(lf').
class EInvBlock {
 public:
  EInvBlock(const CouplingDims& dims, Rng& rng, DType dtype);

  EnhancedForward forward(const Tensor& lf, const Tensor& hf) const;
  EnhancedInverse inverse(const Tensor& lf, const Tensor& hf) const;
  std::vector<double> log_jacobian(const Tensor& lf, const Tensor& hf) const;

  const CouplingDims& dims() const { return dims_; }
  void collect_parameters(const std::string& prefix, NamedParameters& out) const;

 private:
  void check(const Tensor& lf, const Tensor& hf) const;

  CouplingDims dims_;
  DenseBlock phi_;
  DenseBlock varphi_;
  DenseBlock rho_;
  DenseBlock eta_;
};

struct ModelConfig {
  int scale = 2;
  std::size_t total_blocks = 8;
  std::size_t enhanced_blocks = 5;
  std::size_t growth = 32;
  double clamp_alpha = 1.0;
  DType dtype = DType::f64;

  /// 8 blocks / 5 enhanced at x2, 16 / 10 at x4.
  static ModelConfig standard(int scale);
  void validate() const;
};

struct ModelForward {
  Tensor y;          // LR image from the downscaling module, 8-bit quantized
  Tensor y_hat;      // simulated compressed LR, 8-bit quantized
  Tensor z_hat;      // HF latent
  Tensor y_pre;      // y before quantization
  Tensor y_hat_pre;  // y_hat before quantization
};

struct ModelInverse {
  Tensor x;    // restored HR image
  Tensor y_r;  // inversely restored LR from the last enhanced block
};

/// Haar split followed by the downscaling module f (enhanced blocks) and the
/// compression simulator g (vanilla blocks). LF values are carried at image
/// scale: the LL path is divided by 2^levels on entry.
class SainModel {
 public:
  SainModel(const ModelConfig& config, std::uint64_t seed);

  ModelForward forward(const Tensor& x, bool quantize = true) const;
  ModelInverse inverse(const Tensor& y, const Tensor& z) const;

  const ModelConfig& config() const { return config_; }
  const HaarStack& haar() const { return haar_; }
  Shape lr_shape(const Shape& hr) const;
  Shape latent_shape(const Shape& hr) const;
  std::size_t lf_channels() const { return haar_.lf_channels().size(); }
  std::size_t hf_channels() const { return haar_.hf_channels().size(); }

  const std::vector<EInvBlock>& enhanced_blocks() const { return f_; }
  const std::vector<VInvBlock>& vanilla_blocks() const { return g_; }

  /// Every trainable tensor with a stable, unique name.
  NamedParameters parameters() const;

 private:
  void check_input(const Shape& s) const;

  ModelConfig config_;
  HaarStack haar_;
  double lf_gain_;
  std::vector<EInvBlock> f_;
  std::vector<VInvBlock> g_;
};

}  // namespace sain
