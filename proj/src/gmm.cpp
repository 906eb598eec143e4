#include "sain/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sain/ops.hpp"

namespace sain {

namespace {

double softplus_value(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Tensor noise_field(const Shape& shape, DType dtype, Rng& rng, bool gumbel) {
  std::vector<double> values(shape.numel());
  for (double& v : values) v = gumbel ? -std::log(-std::log(rng.uniform_open())) : rng.normal();
  return Tensor::from_vector(shape, values, dtype);
}

// Per-element (hard) Gumbel-softmax across K aligned logit fields.
std::vector<Tensor> gumbel_fields(const std::vector<Tensor>& logit_fields, double tau, Rng& rng,
                                  bool hard) {
  if (!(tau > 0)) throw std::invalid_argument("gumbel_softmax: temperature must be positive");
  const Shape shape = logit_fields.front().shape();
  const DType dt = logit_fields.front().dtype();
  const std::size_t k_count = logit_fields.size();

  std::vector<Tensor> perturbed;
  perturbed.reserve(k_count);
  for (const auto& field : logit_fields) {
    perturbed.push_back(scale(add(field, noise_field(shape, dt, rng, true)), 1.0 / tau));
  }

  std::vector<std::vector<double>> values;
  for (const auto& p : perturbed) values.push_back(p.to_vector());
  std::vector<double> peak(shape.numel());
  std::vector<std::size_t> winner(shape.numel(), 0);
  for (std::size_t i = 0; i < peak.size(); ++i) {
    peak[i] = values[0][i];
    for (std::size_t k = 1; k < k_count; ++k) {
      if (values[k][i] > peak[i]) {
        peak[i] = values[k][i];
        winner[i] = k;
      }
    }
  }
  const Tensor peak_t = Tensor::from_vector(shape, peak, dt);

  std::vector<Tensor> expd;
  Tensor total;
  for (const auto& p : perturbed) {
    expd.push_back(exp(sub(p, peak_t)));
    total = total.defined() ? add(total, expd.back()) : expd.back();
  }
  std::vector<Tensor> weights;
  for (std::size_t k = 0; k < k_count; ++k) {
    Tensor soft = div(expd[k], total);
    if (hard) {
      std::vector<double> one_hot(shape.numel(), 0.0);
      for (std::size_t i = 0; i < one_hot.size(); ++i) one_hot[i] = winner[i] == k ? 1.0 : 0.0;
      soft = straight_through(Tensor::from_vector(shape, one_hot, dt), soft);
    }
    weights.push_back(soft);
  }
  return weights;
}

}  // namespace

GmmParams GmmParams::initial(std::size_t components, DType dtype, double sigma, double spread) {
  if (components == 0) throw std::invalid_argument("GMM needs at least one component");
  if (!(sigma > kSigmaFloor)) throw std::invalid_argument("GMM initial sigma must exceed the floor");
  if (!(spread >= 0)) throw std::invalid_argument("GMM initial spread must be non-negative");
  const Shape s{1, components, 1, 1};
  std::vector<double> mu(components, 0.0);
  if (components > 1) {
    for (std::size_t k = 0; k < components; ++k) {
      mu[k] = spread * (-1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(components - 1));
    }
  }
  // softplus(raw) + floor == sigma
  const double raw = std::log(std::expm1(sigma - kSigmaFloor));
  GmmParams p;
  p.logits = Tensor::zeros(s, dtype);
  p.means = Tensor::from_vector(s, mu, dtype);
  p.raw_scales = Tensor::full(s, raw, dtype);
  p.logits.set_requires_grad(true);
  p.means.set_requires_grad(true);
  p.raw_scales.set_requires_grad(true);
  return p;
}

GmmParams GmmParams::from_moments(const std::vector<double>& weights, const std::vector<double>& means,
                                  const std::vector<double>& sigmas, DType dtype) {
  const std::size_t k = weights.size();
  if (k == 0 || means.size() != k || sigmas.size() != k) {
    throw std::invalid_argument("GMM moments must be non-empty and of equal length");
  }
  std::vector<double> logits(k);
  std::vector<double> raw(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(weights[i] > 0) || !(sigmas[i] > kSigmaFloor)) {
      throw std::invalid_argument("GMM weights must be positive and sigmas above the floor");
    }
    logits[i] = std::log(weights[i]);
    raw[i] = std::log(std::expm1(sigmas[i] - kSigmaFloor));
  }
  const Shape s{1, k, 1, 1};
  return {Tensor::from_vector(s, logits, dtype), Tensor::from_vector(s, means, dtype),
          Tensor::from_vector(s, raw, dtype)};
}

std::vector<double> GmmParams::weights() const {
  auto l = logits.to_vector();
  const double peak = *std::max_element(l.begin(), l.end());
  double total = 0.0;
  for (double& v : l) total += (v = std::exp(v - peak));
  for (double& v : l) v /= total;
  return l;
}

std::vector<double> GmmParams::sigmas() const {
  auto r = raw_scales.to_vector();
  for (double& v : r) v = softplus_value(v) + kSigmaFloor;
  return r;
}

void GmmParams::collect_parameters(const std::string& prefix, NamedParameters& out) const {
  out.emplace_back(prefix + ".logits", logits);
  out.emplace_back(prefix + ".means", means);
  out.emplace_back(prefix + ".raw_scales", raw_scales);
}

Tensor gmm_log_pdf(const GmmParams& params, const Tensor& z) {
  const auto pi = params.weights();
  const auto mu = params.means.to_vector();
  const auto sigma = params.sigmas();
  const std::size_t k_count = pi.size();
  std::vector<double> out = z.to_vector();
  std::vector<double> terms(k_count);
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
  for (double& v : out) {
    double peak = -INFINITY;
    for (std::size_t k = 0; k < k_count; ++k) {
      const double d = (v - mu[k]) / sigma[k];
      terms[k] = std::log(pi[k]) - std::log(sigma[k]) - log_norm - 0.5 * d * d;
      peak = std::max(peak, terms[k]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - peak);
    v = peak + std::log(acc);
  }
  return Tensor::from_vector(z.shape(), out, z.dtype());
}

Tensor gumbel_softmax(const Tensor& logits, double tau, Rng& rng, bool hard) {
  const Shape s = logits.shape();
  if (s.n != 1 || s.h != 1 || s.w != 1) {
    throw ShapeError("gumbel_softmax: logits must be (1,K,1,1), got " + s.str());
  }
  std::vector<Tensor> fields;
  for (std::size_t k = 0; k < s.c; ++k) fields.push_back(slice_channels(logits, k, 1));
  return concat_channels(gumbel_fields(fields, tau, rng, hard));
}

Tensor gmm_sample(const GmmParams& params, const Shape& shape, double tau, Rng& rng) {
  const std::size_t k_count = params.components();
  const DType dt = params.logits.dtype();
  std::vector<Tensor> logit_fields;
  for (std::size_t k = 0; k < k_count; ++k) {
    logit_fields.push_back(expand(slice_channels(params.logits, k, 1), shape));
  }
  const std::vector<Tensor> w = gumbel_fields(logit_fields, tau, rng, true);
  const Tensor sigma = add_scalar(softplus(params.raw_scales), GmmParams::kSigmaFloor);
  Tensor z;
  for (std::size_t k = 0; k < k_count; ++k) {
    const Tensor eps = noise_field(shape, dt, rng, false);
    const Tensor component = add(expand(slice_channels(params.means, k, 1), shape),
                                 mul(expand(slice_channels(sigma, k, 1), shape), eps));
    const Tensor term = mul(w[k], component);
    z = z.defined() ? add(z, term) : term;
  }
  return z;
}

}  // namespace sain
