#include "sain/optim.hpp"

#include <cmath>

namespace sain {

Adam::Adam(NamedParameters params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const auto& [name, p] : params_) {
    if (!p.is_leaf()) throw std::invalid_argument("Adam: parameter " + name + " is not a leaf");
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

void Adam::step(double lr) {
  std::vector<std::vector<double>> grads(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Tensor g = params_[i].second.grad();
    if (!g.defined()) {
      grads[i].assign(params_[i].second.numel(), 0.0);
      continue;
    }
    grads[i] = g.to_vector();
    for (double v : grads[i]) {
      if (!std::isfinite(v)) {
        throw NonFiniteGradient("non-finite gradient in parameter " + params_[i].first);
      }
    }
  }
  ++steps_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    auto& m = m_[i];
    auto& v = v_[i];
    const auto& g = grads[i];
    dispatch(p.dtype(), [&]<class T>() {
      auto data = p.mutable_data<T>();
      for (std::size_t k = 0; k < g.size(); ++k) {
        m[k] = b1 * m[k] + (1.0 - b1) * g[k];
        v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
        const double update = lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.eps);
        data[k] = static_cast<T>(static_cast<double>(data[k]) - update);
      }
    });
  }
}

double scheduled_lr(double base, std::uint64_t half_life, std::uint64_t t) {
  if (half_life == 0) return base;
  return base * std::ldexp(1.0, -static_cast<int>(t / half_life));
}

}  // namespace sain
