#include "stats.hpp"

#include <cmath>

namespace sain::testing {

double integrate_density(const GmmParams& params, double lo, double hi, std::size_t points) {
  std::vector<double> grid(points);
  const double dx = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = lo + dx * static_cast<double>(i);
  const auto logp = gmm_log_pdf(params, Tensor::from_vector({1, 1, 1, points}, grid)).to_vector();
  double total = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double w = (i == 0 || i + 1 == points) ? 0.5 : 1.0;
    total += w * std::exp(logp[i]);
  }
  return total * dx;
}

namespace {
double mixture_cdf(const GmmParams& p, double x) {
  const auto pi = p.weights();
  const auto mu = p.means.to_vector();
  const auto sigma = p.sigmas();
  double c = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) c += pi[k] * 0.5 * std::erfc(-(x - mu[k]) / (sigma[k] * std::sqrt(2.0)));
  return c;
}
}  // namespace

double histogram_tv(const GmmParams& params, const std::vector<double>& samples, double lo, double hi,
                    std::size_t bins) {
  std::vector<double> counts(bins + 1, 0.0);  // last slot: outside [lo, hi)
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double s : samples) {
    if (s < lo || s >= hi) {
      counts[bins] += 1;
      continue;
    }
    counts[std::min(bins - 1, static_cast<std::size_t>((s - lo) / width))] += 1;
  }
  const double n = static_cast<double>(samples.size());
  double tv = 0.0;
  double inside = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double p = mixture_cdf(params, lo + width * (b + 1)) - mixture_cdf(params, lo + width * b);
    inside += p;
    tv += std::fabs(counts[b] / n - p);
  }
  tv += std::fabs(counts[bins] / n - (1.0 - inside));
  return 0.5 * tv;
}

double mixture_mean(const GmmParams& params) {
  const auto pi = params.weights();
  const auto mu = params.means.to_vector();
  double m = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) m += pi[k] * mu[k];
  return m;
}

double mixture_variance(const GmmParams& params) {
  const auto pi = params.weights();
  const auto mu = params.means.to_vector();
  const auto sigma = params.sigmas();
  double second = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) second += pi[k] * (sigma[k] * sigma[k] + mu[k] * mu[k]);
  const double m = mixture_mean(params);
  return second - m * m;
}

}  // namespace sain::testing
