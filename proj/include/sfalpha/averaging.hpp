#pragma once

#include "sfalpha/dynamics.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <vector>

namespace sfalpha {

/// Windows for ergodic estimation of the averaged drift. Defaults follow the
/// dissipativity gap: burn-in 8/gap (relative bias ~ e^{-4}), window 100/gap.
struct BbarParams {
    double burn_in = 0.0;  // 0 -> 8 / gap
    double window = 0.0;   // 0 -> 100 / gap
    double h_f = 1e-3;     // frozen-equation step
    int ensemble = 32;     // independent trajectories, each time-averaged
    int blocks = 16;       // block count per trajectory for jackknife / MoM
};

struct BbarEstimate {
    std::vector<double> value;
    std::vector<double> stderr_; // per mode
    bool converged = true;       // false when block means disagree beyond 5 se
};

/// Ergodic (time-average) estimate of Bbar(x) = int B(x,y) mu^x(dy), with a
/// jackknife standard error over blocks. Unbounded B uses median-of-means.
BbarEstimate estimate_bbar(std::span<const double> x, const Problem& problem,
                           const BbarParams& params, SeededStream stream);

/// The averaged drift: analytic when the coefficients provide it, otherwise
/// ergodic estimation with a quantized get-or-compute cache (atomic map; the
/// result is independent of which worker fills an entry).
class BbarOracle {
public:
    enum class Kind { Analytic, Ergodic };

    /// Analytic oracle; requires coeffs->has_analytic_bbar().
    static BbarOracle analytic(const Problem& problem);
    static BbarOracle ergodic(const Problem& problem, BbarParams params, SeededStream stream);

    Kind kind() const { return kind_; }
    void evaluate(std::span<const double> x, std::span<double> out) const;
    DriftFn drift() const;
    std::size_t cache_size() const;

private:
    BbarOracle(const Problem& problem, Kind kind, BbarParams params, SeededStream stream);

    const Problem* problem_;
    Kind kind_;
    BbarParams params_;
    SeededStream stream_;
    // quantized at 1e-6: float-identical states during averaged integration
    // reuse the entry, distinct states get their own
    mutable std::mutex mutex_;
    mutable std::map<std::vector<std::int64_t>, std::vector<double>> cache_;
    mutable std::uint64_t cache_misses_ = 0;
};

struct PhiEstimate {
    std::vector<double> value;
    std::vector<double> stderr_;
    double truncation_bound = 0.0; // C e^{-gap T_max / 2} (1+|x|+|y|) / (gap/2)
    bool underpowered = false;     // stderr exceeds the estimate
};

/// Poisson-equation solution Phi(x,y) = int_0^inf [E B(x,Y_t^{x,y}) - Bbar(x)] dt,
/// truncated to [0, T_max] and estimated by trapezoidal quadrature over N
/// frozen-equation samples. `bbar` must be available at higher precision than
/// the integrand (analytic, or pre-estimated).
PhiEstimate estimate_phi(std::span<const double> x, std::span<const double> y,
                         const Problem& problem, std::span<const double> bbar, double T_max,
                         int N, double h_f, SeededStream stream,
                         double truncation_c = 1.0);

struct LipschitzFunctional {
    std::function<double(std::span<const double>)> fn;
    double lip = 1.0;
};

struct ErgodicityReport {
    std::vector<double> times;
    std::vector<double> gaps;    // |E G(Y_t) - mu(G)|
    std::vector<double> stderrs; // per time
    double fitted_rate = 0.0;    // from log-linear fit of gaps above noise floor
    double fitted_rate_stderr = 0.0;
    double r_squared = 0.0;
    double bound_rate = 0.0; // (lambda_1 - L_F) / 2
    bool unresolvable = false; // all gaps at noise floor: decay faster than MC resolution
    int points_used = 0;
};

/// Measure the decay of |E G(Y_t^{x,y}) - mu^x(G)| on a time grid with N
/// samples; mu^x(G) comes from an independent long run.
ErgodicityReport measure_ergodic_decay(const LipschitzFunctional& G, std::span<const double> x,
                                       std::span<const double> y, std::span<const double> time_grid,
                                       int N, const Problem& problem, double h_f,
                                       SeededStream stream);

} // namespace sfalpha
