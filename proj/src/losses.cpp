#include "sain/losses.hpp"

#include <string>

#include "sain/ops.hpp"

namespace sain {

namespace {

void require_same(const Tensor& a, const Tensor& b, const std::string& what) {
  if (!a.defined() || !b.defined()) throw ShapeError(what + ": missing tensor");
  if (a.shape() != b.shape()) {
    throw ShapeError(what + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
}

}  // namespace

Tensor l_rec(const Tensor& restored, const Tensor& target) {
  require_same(restored, target, "l_rec");
  return mean(square(sub(restored, target)));
}

Tensor l_lr(const Tensor& a, const Tensor& b) {
  require_same(a, b, "l_lr");
  return mean(abs(sub(a, b)));
}

LossReport combine_losses(const LossComponents& parts, const LossWeights& weights) {
  const Tensor* terms[] = {&parts.rec, &parts.fit, &parts.fit_prime, &parts.reg, &parts.rel};
  const double lambdas[] = {weights.rec, weights.fit, weights.fit_prime, weights.reg, weights.rel};
  Tensor total;
  for (int i = 0; i < 5; ++i) {
    if (terms[i]->numel() != 1) throw ShapeError("combine_losses: components must be scalars");
    const Tensor t = scale(*terms[i], lambdas[i]);
    total = total.defined() ? add(total, t) : t;
  }
  LossReport r;
  r.rec = parts.rec.item();
  r.fit = parts.fit.item();
  r.fit_prime = parts.fit_prime.item();
  r.reg = parts.reg.item();
  r.rel = parts.rel.item();
  r.total = total;
  r.total_value = total.item();
  return r;
}

LossReport total_loss(const LossInputs& in, const GuidanceTargets& targets, const LossWeights& weights) {
  auto checked = [](const Tensor& a, const Tensor& b, const char* name, bool squared) {
    try {
      return squared ? l_rec(a, b) : l_lr(a, b);
    } catch (const ShapeError& e) {
      throw ShapeError(std::string("loss component ") + name + ": " + e.what());
    }
  };
  LossComponents parts;
  parts.rec = checked(in.x_restored, in.x, "rec", true);
  parts.fit = checked(in.y, targets.bicubic_lr, "fit", false);
  parts.fit_prime = checked(in.y_hat, targets.real_bicubic_lr, "fit_prime", false);
  parts.reg = checked(in.y, in.y_r, "reg", false);
  parts.rel = checked(in.y_hat, targets.real_y, "rel", false);
  return combine_losses(parts, weights);
}

}  // namespace sain
