#pragma once

#include "sfalpha/rng.hpp"
#include "sfalpha/spectral.hpp"
#include "sfalpha/stable_noise.hpp"

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfalpha {

/// Thrown when a trajectory produces a non-finite value. Heavy tails make
/// enormous excursions legitimate; overflow to infinity is not. The sample
/// is aborted, not the experiment.
struct TrajectoryAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Coefficient pair (B, F) with declared Lipschitz constants and an optional
/// analytic averaged drift.
class Coefficients {
public:
    virtual ~Coefficients() = default;

    virtual void apply_b(std::span<const double> x, std::span<const double> y,
                         std::span<double> out) const = 0;
    virtual void apply_f(std::span<const double> x, std::span<const double> y,
                         std::span<double> out) const = 0;

    /// Declared Lipschitz constant of B in (x,y).
    double lip_b() const { return lip_b_; }
    /// Declared Lipschitz constant L_F of F in y; must satisfy L_F < lambda_1.
    double lip_f_y() const { return lip_f_y_; }

    virtual bool has_analytic_bbar() const { return false; }
    virtual void analytic_bbar(std::span<const double> x, std::span<double> out) const {
        (void)x;
        (void)out;
        throw std::logic_error("no analytic averaged drift for these coefficients");
    }
    /// True when B is uniformly bounded (Nemytskii with bounded pointwise map);
    /// estimators then use plain means instead of median-of-means.
    virtual bool b_bounded() const { return false; }

protected:
    Coefficients(double lip_b, double lip_f_y) : lip_b_(lip_b), lip_f_y_(lip_f_y) {}

private:
    double lip_b_;
    double lip_f_y_;
};

/// Mode-wise linear benchmark: B(x,y)_k = b0 x_k + b1 y_k,
/// F(x,y)_k = a x_k - b y_k (so L_F = b). Its averaged drift is analytic:
/// the frozen equation is mode-wise linear with symmetric noise, the
/// stationary mean solves 0 = -(lambda_k + b) m + a x_k, hence
/// Bbar(x)_k = b0 x_k + b1 a x_k / (lambda_k + b).
class LinearBenchmark final : public Coefficients {
public:
    LinearBenchmark(double a, double b, double b0, double b1, SpectrumPtr spectrum);

    void apply_b(std::span<const double> x, std::span<const double> y,
                 std::span<double> out) const override;
    void apply_f(std::span<const double> x, std::span<const double> y,
                 std::span<double> out) const override;
    bool has_analytic_bbar() const override { return true; }
    void analytic_bbar(std::span<const double> x, std::span<double> out) const override;

    double a() const { return a_; }
    double b() const { return b_; }
    double b0() const { return b0_; }
    double b1() const { return b1_; }

    /// Stationary mean of the frozen equation, m_k = a x_k / (lambda_k + b).
    void frozen_mean(std::span<const double> x, std::span<double> out) const;

private:
    double a_, b_, b0_, b1_;
    SpectrumPtr spectrum_;
};

/// Pointwise (Nemytskii) coefficients: B(x,y)(xi) = b(x(xi), y(xi)) evaluated
/// by transform to the sine grid, pointwise application, and transform back.
class NemytskiiCoefficients final : public Coefficients {
public:
    using PointMap = std::function<double(double, double)>;

    /// lip constants are the supplied derivative bounds of the pointwise maps.
    NemytskiiCoefficients(PointMap b_point, PointMap f_point, double lip_b, double lip_f_y,
                          SpectrumPtr spectrum, bool b_is_bounded = true,
                          int n_points = 0 /* 0 -> 2m+1 */);

    void apply_b(std::span<const double> x, std::span<const double> y,
                 std::span<double> out) const override;
    void apply_f(std::span<const double> x, std::span<const double> y,
                 std::span<double> out) const override;
    bool b_bounded() const override { return b_bounded_; }

    const SineGrid& grid() const { return grid_; }

private:
    void apply_pointwise(const PointMap& f, std::span<const double> x, std::span<const double> y,
                         std::span<double> out) const;

    PointMap b_point_, f_point_;
    SpectrumPtr spectrum_;
    SineGrid grid_;
    bool b_bounded_;
};

/// A fully specified slow-fast system, ready to integrate.
struct Problem {
    SpectrumPtr spectrum;
    std::shared_ptr<const Coefficients> coeffs;
    StableNoiseSpec noise;
    double epsilon = 1.0;
    // fast substep: n_sub = ceil(h gap / (c_sub epsilon)), i.e. the frozen
    // drift is never held over more than c_sub relaxation times 1/gap
    double c_sub = 0.5;

    Problem(SpectrumPtr spectrum_, std::shared_ptr<const Coefficients> coeffs_,
            StableNoiseSpec noise_, double epsilon_);

    int m() const { return spectrum->m; }
    double lambda1() const { return spectrum->eigenvalues.front(); }
    /// Dissipativity gap lambda_1 - L_F, positive by construction.
    double gap() const { return lambda1() - coeffs->lip_f_y(); }
};

struct SlowFastState {
    SpectralField x;
    SpectralField y;
    double t = 0.0;
};

/// Stream-path roles; kept stable so coupled runs can replay identical draws.
enum class StreamRole : std::uint64_t {
    SlowNoise = 0,
    FastNoise = 1,
    SlowNoiseUncoupled = 2,
};

struct SimOptions {
    /// Slow-noise increments are generated on a grid of h / noise_substeps and
    /// aggregated exactly through the semigroup; runs at different macro steps
    /// but equal noise grids share the identical noise path.
    int noise_substeps = 1;
    /// Address slow noise under this role (uncoupled control runs use
    /// SlowNoiseUncoupled).
    StreamRole slow_role = StreamRole::SlowNoise;
};

/// Per-step observer; step_index 0 is the initial state.
using StepCallback =
    std::function<void(int step_index, double t, std::span<const double> x, std::span<const double> y)>;

/// One macro step of the exponential Euler scheme for the multiscale system.
SlowFastState step_multiscale(const Problem& problem, const SlowFastState& state, double h,
                              SeededStream& sample_stream, std::uint64_t step_index,
                              const SimOptions& options = {});

/// Integrate the multiscale system on t in [0, T] with macro step h.
/// `sample_stream` identifies the Monte Carlo sample; slow increments are
/// addressed by (role, mode, step) so an averaged run with the same stream
/// consumes identical slow noise.
void simulate_multiscale(const Problem& problem, std::span<const double> x0,
                         std::span<const double> y0, double T, double h,
                         SeededStream sample_stream, const StepCallback& on_step,
                         const SimOptions& options = {});

/// Frozen equation: dY = [AY + F(x,Y)]dt + dZ at the fast equation's natural
/// time (no epsilon), x held fixed.
void simulate_frozen(const Problem& problem, std::span<const double> x_frozen,
                     std::span<const double> y0, double T, double h, SeededStream sample_stream,
                     const StepCallback& on_step);

/// Averaged equation: dXbar = [A Xbar + Bbar(Xbar)]dt + dL, driven by the slow
/// noise addresses of `sample_stream` (coupling).
using DriftFn = std::function<void(std::span<const double> x, std::span<double> out)>;
void simulate_averaged(const Problem& problem, const DriftFn& bbar, std::span<const double> x0,
                       double T, double h, SeededStream sample_stream, const StepCallback& on_step,
                       const SimOptions& options = {});

} // namespace sfalpha
