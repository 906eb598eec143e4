#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sain/rng.hpp"
#include "sain/tensor.hpp"

namespace sain {

/// Learnable isotropic Gaussian mixture shared by every latent element.
/// pi = softmax(logits), sigma = softplus(raw_scales) + 1e-6. Each parameter
/// tensor has shape (1, K, 1, 1).
struct GmmParams {
  static constexpr double kSigmaFloor = 1e-6;

  Tensor logits;
  Tensor means;
  Tensor raw_scales;

  /// Uniform weights, means evenly spaced on [-spread, spread], scales `sigma`.
  static GmmParams initial(std::size_t components, DType dtype = DType::f64, double sigma = 1.0,
                           double spread = 1.0);
  /// Fixed (non-trainable) parameters from explicit weights, means and sigmas.
  static GmmParams from_moments(const std::vector<double>& weights, const std::vector<double>& means,
                                const std::vector<double>& sigmas, DType dtype = DType::f64);

  std::size_t components() const { return logits.shape().c; }
  std::vector<double> weights() const;
  std::vector<double> sigmas() const;

  void collect_parameters(const std::string& prefix, NamedParameters& out) const;
};

/// Elementwise log p(z) under the mixture (log-sum-exp stabilised).
Tensor gmm_log_pdf(const GmmParams& params, const Tensor& z);

/// softmax((logits + Gumbel noise) / tau) over a (1,K,1,1) logit tensor. With
/// `hard`, the forward value is the one-hot argmax while gradients follow the
/// soft weights.
Tensor gumbel_softmax(const Tensor& logits, double tau, Rng& rng, bool hard);

/// Draws a latent of `shape`: per element, component weights from a hard
/// Gumbel-softmax, then z = sum_k w_k (mu_k + sigma_k * eps_k). Differentiable
/// in all three parameter tensors.
Tensor gmm_sample(const GmmParams& params, const Shape& shape, double tau, Rng& rng);

}  // namespace sain
