#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sain/tensor.hpp"

namespace sain {

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed list of leaf tensors, updated in place.
/// Parameters without a gradient are treated as having a zero gradient.
class Adam {
 public:
  explicit Adam(NamedParameters params, AdamOptions options = {});

  /// One update. Throws NonFiniteGradient (naming the parameter) before
  /// touching anything if any gradient holds NaN or Inf.
  void step(double lr);
  void zero_grad();

  const NamedParameters& parameters() const { return params_; }
  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  NamedParameters params_;
  AdamOptions options_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// base * 0.5^floor(t / half_life); half_life 0 keeps the base rate.
double scheduled_lr(double base, std::uint64_t half_life, std::uint64_t t);

}  // namespace sain
