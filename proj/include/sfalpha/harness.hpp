#pragma once

#include "sfalpha/averaging.hpp"
#include "sfalpha/dynamics.hpp"
#include "sfalpha/stats.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace sfalpha {

/// Raised when an experiment itself fails (too many aborted samples,
/// unusable ladder), as opposed to a configuration error.
struct ExperimentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    // problem
    int m = 8;
    std::string coefficients = "linear"; // linear | nemytskii
    double a = 1.0, b = 1.0, b0 = 0.5, b1 = 1.0;
    std::string nemytskii_b = "tanh_sum"; // tanh(u+v)
    std::string nemytskii_f = "sin_mix";  // sin(u) + 0.5 sin(v)
    // noise
    double alpha = 1.75;
    double beta_scale = 1.0, beta_decay = 2.0;
    double gamma_scale = 1.0, gamma_decay = 1.0;
    // initial data
    std::string x_profile = "decay2"; // zero | e1 | decay2 (x_k = scale k^-2)
    double x_scale = 1.0;
    std::string y_profile = "zero";
    double y_scale = 1.0;
    // experiment
    std::vector<double> epsilon_ladder = {0.0625, 0.03125, 0.015625, 0.0078125,
                                          0.00390625, 0.001953125};
    int samples = 2000;
    double p = 1.0;
    double T = 1.0;
    double h = 0.001953125; // 2^-9
    std::string phi = "cos_e1"; // cos_e1 | gauss | constant
    std::vector<int> m_ladder = {4, 8, 16, 32, 64}; // last entry is the reference m*
    double galerkin_epsilon = 0.1;
    int blocks = 16;
    bool coupled = true;
    // averaging
    std::string bbar = "analytic"; // analytic | ergodic
    BbarParams bbar_params;
    // ergodicity experiment
    double ergodicity_t_max = 0.6;
    double ergodicity_t_step = 0.05;
    int ergodicity_samples = 4000;
    double y_amplitude = 5.0; // ergodicity initial displacement along e_1
    // execution
    std::uint64_t master_seed = 42;
    int threads = 0; // 0 = auto

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Problem instance for the configured coefficients at the given epsilon and
/// mode count.
Problem make_problem(const ExperimentConfig& config, double epsilon, int m);

std::vector<double> make_initial(const std::string& profile, double scale, int m);

struct RateRow {
    double epsilon = 0.0;
    double error = 0.0;
    double stderr_ = 0.0;
    double n_effective = 0.0;
    int aborted = 0;
};

struct RateTable {
    std::vector<RateRow> rows;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    std::vector<int> used_points;     // indices of rows entering the fit
    std::vector<int> excluded_points; // rows with error below 3x stderr
};

/// OLS of log(error) against log(epsilon). Points with error below 3x their
/// stderr are excluded (and reported); needs >= 3 usable points and
/// non-degenerate epsilon spacing.
RateFit fit_loglog(const RateTable& table);

struct RateResult {
    RateTable table;
    RateFit fit;
    bool fit_ok = true;      // false when too few points rise above the noise floor
    std::string fit_message; // reason when fit_ok is false
    double reference_slope = 0.0; // 1 - 1/alpha for the strong experiment
};

/// Strong-error ladder: per epsilon, median-of-means of the per-time
/// E|X^eps_t - Xbar_t|^p maximized over the saved grid, with multiscale and
/// averaged runs coupled through identical slow-noise increments. Reported
/// errors are on the |.| scale (error^{1/p}) so the reference slope is
/// 1 - 1/alpha regardless of p.
RateResult strong_rate_experiment(const ExperimentConfig& config);

/// Weak-error ladder: per epsilon, max over the grid of
/// |E[phi(X^eps_t) - phi(Xbar_t)]|, with coupling as a variance-reduction
/// device (unbiased for the difference of expectations).
RateResult weak_rate_experiment(const ExperimentConfig& config);

struct GalerkinRow {
    int m = 0;
    double error = 0.0;
    double stderr_ = 0.0;
    int aborted = 0;
};

struct GalerkinResult {
    std::vector<GalerkinRow> rows;
    int m_star = 0;
    bool monotone = true; // strictly decreasing beyond joint stderr
};

/// E|X^{m,eps}_T - X^{m*,eps}_T| over the m ladder against the reference
/// resolution m* (top of the ladder), sharing low-mode noise streams.
GalerkinResult galerkin_convergence_experiment(const ExperimentConfig& config);

} // namespace sfalpha
