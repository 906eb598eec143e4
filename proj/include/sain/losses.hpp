#pragma once

#include "sain/tensor.hpp"

namespace sain {

/// Mean squared error (HR reconstruction).
Tensor l_rec(const Tensor& restored, const Tensor& target);
/// Mean absolute error (LR guidance terms).
Tensor l_lr(const Tensor& a, const Tensor& b);

struct LossWeights {
  double rec = 1.0;
  double fit = 0.25;
  double fit_prime = 0.25;
  double reg = 0.25;
  double rel = 0.25;
};

/// Scalar loss tensors before weighting.
struct LossComponents {
  Tensor rec;
  Tensor fit;
  Tensor fit_prime;
  Tensor reg;
  Tensor rel;
};

struct LossReport {
  double rec = 0;
  double fit = 0;
  double fit_prime = 0;
  double reg = 0;
  double rel = 0;
  double total_value = 0;
  Tensor total;
};

/// Weighted sum of the five components.
LossReport combine_losses(const LossComponents& parts, const LossWeights& weights);

/// Network outputs that enter the objective, all on the [0, 1] scale.
struct LossInputs {
  Tensor x;           // HR batch
  Tensor x_restored;  // inverse pass on the distorted LR and a latent sample
  Tensor y;           // LR from the downscaling module
  Tensor y_hat;       // simulated compressed LR
  Tensor y_r;         // inversely restored LR
};

/// Constant targets; no gradient flows into them.
struct GuidanceTargets {
  Tensor bicubic_lr;       // Bicubic(x)
  Tensor real_bicubic_lr;  // real codec applied to Bicubic(x)
  Tensor real_y;           // real codec applied to y
};

/// rec(x', x), fit(y, bic), fit'(y_hat, real(bic)), reg(y, y_r), rel(y_hat, real(y)).
LossReport total_loss(const LossInputs& in, const GuidanceTargets& targets, const LossWeights& weights);

}  // namespace sain
