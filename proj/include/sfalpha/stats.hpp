#pragma once

#include <span>
#include <utility>
#include <vector>

namespace sfalpha {

/// Mean and standard error of the mean.
std::pair<double, double> mean_stderr(std::span<const double> samples);

/// Median-of-means: median of `blocks` block means, with a standard error
/// from the block spread scaled by the median efficiency constant
/// sqrt(pi/2). Requires blocks >= 8 and samples >= 4*blocks. Heavy-tailed
/// samples with finite mean but infinite variance stay estimable this way.
std::pair<double, double> robust_mean(std::span<const double> samples, int blocks);

double median(std::vector<double> values);

/// Ordinary least squares y = a + b x; returns (intercept, slope,
/// slope stderr, r_squared).
struct OlsFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
};

OlsFit ols(std::span<const double> xs, std::span<const double> ys);

} // namespace sfalpha
