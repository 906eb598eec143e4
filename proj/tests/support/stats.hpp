#pragma once

#include <vector>

#include "sain/gmm.hpp"

namespace sain::testing {

/// Trapezoid integral of exp(log_pdf) over [lo, hi].
double integrate_density(const GmmParams& params, double lo, double hi, std::size_t points);

/// Total-variation distance between the histogram of `samples` and the
/// mixture's bin probabilities (exact normal CDF differences) on `bins`
/// equal bins spanning [lo, hi]; mass outside the range counts as its own bin.
double histogram_tv(const GmmParams& params, const std::vector<double>& samples, double lo, double hi,
                    std::size_t bins);

/// Mixture mean and variance from the closed-form moment formulas.
double mixture_mean(const GmmParams& params);
double mixture_variance(const GmmParams& params);

}  // namespace sain::testing
