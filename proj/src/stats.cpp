#include "sfalpha/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sfalpha {

std::pair<double, double> mean_stderr(std::span<const double> samples) {
    if (samples.empty())
        throw std::invalid_argument("mean_stderr: empty input");
    const double n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double s : samples)
        sum += s;
    const double mean = sum / n;
    double ss = 0.0;
    for (double s : samples)
        ss += (s - mean) * (s - mean);
    const double se = samples.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return {mean, se};
}

double median(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("median: empty input");
    const size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double hi = values[mid];
    if (values.size() % 2 == 1)
        return hi;
    std::nth_element(values.begin(), values.begin() + mid - 1, values.begin() + mid);
    return 0.5 * (values[mid - 1] + hi);
}

std::pair<double, double> robust_mean(std::span<const double> samples, int blocks) {
    if (blocks < 8)
        throw std::invalid_argument("robust_mean: need at least 8 blocks");
    if (static_cast<int>(samples.size()) < 4 * blocks)
        throw std::invalid_argument("robust_mean: need at least 4 samples per block");
    std::vector<double> block_means(blocks, 0.0);
    std::vector<int> counts(blocks, 0);
    const size_t n = samples.size();
    for (size_t i = 0; i < n; ++i) {
        const int b = static_cast<int>(i * static_cast<size_t>(blocks) / n);
        block_means[b] += samples[i];
        counts[b] += 1;
    }
    for (int b = 0; b < blocks; ++b)
        block_means[b] /= counts[b];
    const double est = median(block_means);
    double ss = 0.0, mean = 0.0;
    for (double v : block_means)
        mean += v;
    mean /= blocks;
    for (double v : block_means)
        ss += (v - mean) * (v - mean);
    const double block_se = std::sqrt(ss / (blocks - 1.0) / blocks);
    // sqrt(pi/2): asymptotic efficiency of the median vs the mean
    return {est, std::sqrt(std::numbers::pi / 2.0) * block_se};
}

OlsFit ols(std::span<const double> xs, std::span<const double> ys) {
    const size_t n = xs.size();
    if (n != ys.size() || n < 3)
        throw std::invalid_argument("ols: need >= 3 matched points");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("ols: degenerate abscissa spacing");
    OlsFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = ys[i] - fit.intercept - fit.slope * xs[i];
        rss += r * r;
    }
    fit.slope_stderr = n > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
    fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
    return fit;
}

} // namespace sfalpha
