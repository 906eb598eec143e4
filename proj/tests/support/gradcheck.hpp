#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sain/rng.hpp"
#include "sain/tensor.hpp"

namespace sain::testing {

/// Uniform entries in [lo, hi).
Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                     bool requires_grad = false, DType dtype = DType::f64);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor);

struct GradCheckResult {
  double max_error = 0.0;  // worst relative error
  std::string worst;       // "input[i] element k: analytic vs numeric"
  std::size_t checked = 0;
};

/// Central difference of order h^2 (two evaluations) or h^4 (four).
enum class Stencil { kThreePoint, kFivePoint };

/// Compares reverse-mode gradients of the scalar `loss()` with central
/// differences, perturbing every element of every tensor in `inputs` in place.
/// `loss` must be deterministic.
GradCheckResult gradcheck(const std::function<Tensor()>& loss, const std::vector<Tensor>& inputs,
                          double step = 1e-6, double floor = 1e-8,
                          const std::vector<std::string>& names = {},
                          Stencil stencil = Stencil::kThreePoint);

/// Adds uniform noise in [-amplitude, amplitude] to every parameter in place.
void perturb_parameters(const NamedParameters& params, Rng& rng, double amplitude);

/// Elementwise max |a - b|.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace sain::testing
