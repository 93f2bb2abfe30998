#pragma once

#include "sfalpha/rng.hpp"
#include "sfalpha/spectral.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sfalpha {

/// Cylindrical alpha-stable noise specification: stability index plus the
/// per-mode weight sequences {beta_k} (slow equation) and {gamma_k} (fast).
struct StableNoiseSpec {
    double alpha = 1.5;
    std::vector<double> slow_weights; // beta_k
    std::vector<double> fast_weights; // gamma_k

    StableNoiseSpec() = default;
    StableNoiseSpec(double alpha_, std::vector<double> slow, std::vector<double> fast);

    /// beta_k = beta_scale k^{-beta_decay}, gamma_k = gamma_scale k^{-gamma_decay}.
    static StableNoiseSpec power_law(double alpha, int m, double beta_scale, double beta_decay,
                                     double gamma_scale, double gamma_decay);
};

/// One draw from the standard rotationally symmetric alpha-stable law,
/// E e^{iuX} = e^{-|u|^alpha}, via the Chambers-Mallows-Stuck transform.
double sample_standard_stable(double alpha, SeededStream& stream);

/// Scale of the stochastic-convolution increment
/// int_0^h e^{-lambda(h-s)} weight dL_s, namely
/// weight ((1 - e^{-alpha lambda h}) / (alpha lambda))^{1/alpha}.
/// The increment is then scale * (standard stable draw), exact in law.
double convolution_increment_scale(double lambda, double h, double weight, double alpha);

/// weight h^{1/alpha} * (standard stable draw): the plain increment over h.
double sample_increment(double alpha, double h, double weight, SeededStream& stream);

enum class NoiseRole { Slow, Fast };

/// Vector of independent per-mode stochastic-convolution increments. For the
/// fast role with scale parameter epsilon, the per-mode scale is
/// gamma_k ((1 - e^{-alpha lambda_k h / epsilon}) / (alpha lambda_k))^{1/alpha};
/// the explicit epsilon^{-1/alpha} prefactor cancels against the epsilon
/// inside the convolution.
SpectralField cylindrical_convolution_increment(const StableNoiseSpec& spec,
                                                const SpectrumPtr& spectrum, double h,
                                                NoiseRole role, std::optional<double> epsilon,
                                                SeededStream& stream);

/// Assumption-A2 diagnostics for weights from the power-law family
/// with lambda_k = pi^2 k^2: the beta series converges iff
/// alpha rho_beta - 2(alpha - 1) > 1 and the gamma series iff alpha rho_gamma > 1.
struct AssumptionA2Report {
    bool determined = false;
    bool beta_series_converges = false;
    bool gamma_series_converges = false;
    double beta_exponent_margin = 0.0;  // alpha rho_beta - 2(alpha-1) - 1
    double gamma_exponent_margin = 0.0; // alpha rho_gamma - 1
    double beta_partial_sum = 0.0;      // sum_k beta_k^alpha lambda_k^{alpha-1} at working m
    double gamma_partial_sum = 0.0;     // sum_k gamma_k^alpha
    bool dissipativity_unchecked = true;
    std::string summary() const;
    bool pass() const { return determined && beta_series_converges && gamma_series_converges; }
};

struct PowerLawDecay {
    bool known = true; // false: weights not from a declared family
    double beta_decay = 0.0;
    double gamma_decay = 0.0;
};

AssumptionA2Report check_assumption_a2(const StableNoiseSpec& spec,
                                       std::span<const double> eigenvalues,
                                       const PowerLawDecay& decay);

/// Empirical characteristic function E cos(uX) with standard errors; cos is
/// bounded so the estimator has finite variance regardless of tails.
struct CfPoint {
    double u;
    double mean;
    double stderr_;
};

std::vector<CfPoint> empirical_cf(std::span<const double> samples, std::span<const double> u_grid);

} // namespace sfalpha
